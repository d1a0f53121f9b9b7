//! Line-based `key = value` configuration with `[section]` headers, and the
//! typed experiment configuration the runner consumes.
//!
//! Malformed input surfaces as `MorreyError::Config` with a line or field
//! diagnostic, which the CLI maps to exit code 2.

use crate::error::{MorreyError, Result};
use crate::grid::{dist, Ball, Domain, GridFunction, Point, RadiusLadder, UniformGrid};
use crate::phi::PhiSpec;
use std::collections::BTreeMap;
use std::path::PathBuf;

/// Parsed sections in sorted order; the top-level (pre-section) block lives
/// under the empty name.
#[derive(Clone, Debug, Default)]
pub struct RawConfig {
    pub sections: BTreeMap<String, BTreeMap<String, String>>,
}

/// Parses the INI-style text. `#` and `;` start comments.
pub fn parse_config(text: &str) -> Result<RawConfig> {
    let mut raw = RawConfig::default();
    let mut current = String::new();
    raw.sections.insert(current.clone(), BTreeMap::new());
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = match line.find(['#', ';']) {
            Some(pos) => &line[..pos],
            None => line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(inner) = line.strip_prefix('[') {
            let name = inner
                .strip_suffix(']')
                .ok_or_else(|| MorreyError::Config(format!("line {lineno}: unclosed section header")))?
                .trim();
            if name.is_empty() {
                return Err(MorreyError::Config(format!("line {lineno}: empty section name")));
            }
            current = name.to_string();
            raw.sections.entry(current.clone()).or_default();
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| MorreyError::Config(format!("line {lineno}: expected key = value")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(MorreyError::Config(format!("line {lineno}: empty key")));
        }
        raw.sections
            .get_mut(&current)
            .unwrap()
            .insert(key.to_string(), value.trim().to_string());
    }
    Ok(raw)
}

impl RawConfig {
    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section)?.get(key).map(String::as_str)
    }

    pub fn require(&self, section: &str, key: &str) -> Result<&str> {
        if !self.sections.contains_key(section) {
            return Err(MorreyError::Config(format!("missing [{section}] section")));
        }
        self.get(section, key)
            .ok_or_else(|| MorreyError::Config(format!("missing key `{key}` in [{section}]")))
    }

    pub fn f64(&self, section: &str, key: &str) -> Result<f64> {
        self.require(section, key)?
            .parse()
            .map_err(|e| MorreyError::Config(format!("[{section}] {key}: {e}")))
    }

    pub fn f64_or(&self, section: &str, key: &str, default: f64) -> Result<f64> {
        match self.get(section, key) {
            Some(v) => v
                .parse()
                .map_err(|e| MorreyError::Config(format!("[{section}] {key}: {e}"))),
            None => Ok(default),
        }
    }

    pub fn usize_or(&self, section: &str, key: &str, default: usize) -> Result<usize> {
        match self.get(section, key) {
            Some(v) => v
                .parse()
                .map_err(|e| MorreyError::Config(format!("[{section}] {key}: {e}"))),
            None => Ok(default),
        }
    }

    fn f64_list(&self, section: &str, key: &str) -> Result<Vec<f64>> {
        self.require(section, key)?
            .split(',')
            .map(|t| {
                t.trim()
                    .parse()
                    .map_err(|e| MorreyError::Config(format!("[{section}] {key}: {e}")))
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    Norm,
    Inequality,
    Solve,
    Sucp,
    Suite,
}

/// Fully parsed configuration; typed blocks are materialized on demand so a
/// suite config does not need a grid.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub raw: RawConfig,
    /// Verbatim text, echoed into the run manifest.
    pub text: String,
}

impl ExperimentConfig {
    pub fn from_text(text: &str) -> Result<Self> {
        let raw = parse_config(text)?;
        let kind = match raw.require("", "kind")? {
            "norm" => ExperimentKind::Norm,
            "inequality" => ExperimentKind::Inequality,
            "solve" => ExperimentKind::Solve,
            "sucp" => ExperimentKind::Sucp,
            "suite" => ExperimentKind::Suite,
            other => {
                return Err(MorreyError::Config(format!(
                    "unknown kind `{other}` (expected norm | inequality | solve | sucp | suite)"
                )))
            }
        };
        let seed = raw
            .get("", "seed")
            .unwrap_or("0")
            .parse()
            .map_err(|e| MorreyError::Config(format!("seed: {e}")))?;
        let output_dir = PathBuf::from(raw.get("", "output_dir").unwrap_or("out"));
        Ok(ExperimentConfig {
            kind,
            seed,
            output_dir,
            raw,
            text: text.to_string(),
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_text(&text)
    }

    /// [domain]: dim, shape = box | ball, half_width or radius, nodes.
    pub fn grid(&self) -> Result<UniformGrid> {
        let raw = &self.raw;
        let dim = raw.usize_or("domain", "dim", 0)?;
        if dim == 0 {
            return Err(MorreyError::Config("missing or zero `dim` in [domain]".into()));
        }
        let nodes = raw.usize_or("domain", "nodes", 0)?;
        if nodes < 2 {
            return Err(MorreyError::Config("missing `nodes` in [domain] (need >= 2)".into()));
        }
        let shape = raw.get("domain", "shape").unwrap_or("box");
        let domain = match shape {
            "box" => Domain::symmetric_box(dim, raw.f64("domain", "half_width")?),
            "ball" => {
                let c = self.point("domain", "center", dim)?.unwrap_or([0.0; 3]);
                Domain::ball(dim, c, raw.f64("domain", "radius")?)
            }
            other => Err(MorreyError::Config(format!("unknown domain shape `{other}`"))),
        }?;
        UniformGrid::new(domain, nodes)
    }

    /// [phi]: family = power | logpower | table, with beta / gamma or
    /// radii / values lists; p required, n defaults to the dimension.
    pub fn phi(&self, dim: usize) -> Result<PhiSpec> {
        let raw = &self.raw;
        if !raw.sections.contains_key("phi") {
            return Err(MorreyError::Config("missing [phi] section".into()));
        }
        let p = raw.f64("phi", "p")?;
        let n = raw.f64_or("phi", "n", dim as f64)?;
        match raw.get("phi", "family").unwrap_or("power") {
            "power" => PhiSpec::power(raw.f64("phi", "beta")?, p, n),
            "logpower" => PhiSpec::log_power(raw.f64("phi", "beta")?, raw.f64("phi", "gamma")?, p, n),
            "table" => PhiSpec::table(raw.f64_list("phi", "radii")?, raw.f64_list("phi", "values")?, p, n),
            other => Err(MorreyError::Config(format!("unknown phi family `{other}`"))),
        }
    }

    /// [sweep]: r_min, r_max, ratio (default 2), stride (default nodes/8).
    pub fn sweep(&self, grid: &UniformGrid) -> Result<Vec<Ball>> {
        let raw = &self.raw;
        let ladder = RadiusLadder::new(
            raw.f64("sweep", "r_min")?,
            raw.f64("sweep", "r_max")?,
            raw.f64_or("sweep", "ratio", 2.0)?,
        )?;
        let stride = raw.usize_or("sweep", "stride", (grid.nodes_per_axis / 8).max(1))?;
        crate::grid::ball_sweep(grid, stride, &ladder)
    }

    /// [ladder]: r_min, r_max, ratio (default 2).
    pub fn ladder(&self) -> Result<RadiusLadder> {
        let raw = &self.raw;
        RadiusLadder::new(
            raw.f64("ladder", "r_min")?,
            raw.f64("ladder", "r_max")?,
            raw.f64_or("ladder", "ratio", 2.0)?,
        )
    }

    /// A function described by its own section: kind = zero | constant |
    /// indicator | gaussian | random | csv.
    pub fn function(&self, section: &str, grid: UniformGrid) -> Result<GridFunction> {
        let raw = &self.raw;
        let dim = grid.dim();
        match raw.require(section, "kind")? {
            "zero" => Ok(GridFunction::zeros(grid)),
            "constant" => GridFunction::constant(grid, raw.f64(section, "value")?),
            "indicator" => {
                let c = self.point(section, "center", dim)?.unwrap_or([0.0; 3]);
                let r = raw.f64(section, "radius")?;
                GridFunction::from_fn(grid, |x| if dist(x, &c, dim) < r { 1.0 } else { 0.0 })
            }
            "gaussian" => {
                let c = self.point(section, "center", dim)?.unwrap_or([0.0; 3]);
                let w = raw.f64(section, "width")?;
                let amp = raw.f64_or(section, "amplitude", 1.0)?;
                if w <= 0.0 {
                    return Err(MorreyError::Config(format!("[{section}] width must be positive")));
                }
                GridFunction::from_fn(grid, |x| {
                    let d = dist(x, &c, dim);
                    amp * (-d * d / (w * w)).exp()
                })
            }
            "random" => {
                // one seeded cosine-field battery member
                let battery = crate::battery::standard_battery(grid, self.seed, 4)?;
                Ok(battery.members.into_iter().nth(3).unwrap().1)
            }
            "csv" => {
                let path = raw.require(section, "path")?;
                let file = std::fs::File::open(path)?;
                crate::report::read_grid_csv(grid, std::io::BufReader::new(file))
            }
            other => Err(MorreyError::Config(format!(
                "[{section}] unknown function kind `{other}`"
            ))),
        }
    }

    /// Optional comma-separated point, e.g. `center = 0.1, -0.2`.
    pub fn point(&self, section: &str, key: &str, dim: usize) -> Result<Option<Point>> {
        match self.raw.get(section, key) {
            None => Ok(None),
            Some(text) => {
                let parts: Vec<&str> = text.split(',').collect();
                if parts.len() != dim {
                    return Err(MorreyError::Config(format!(
                        "[{section}] {key}: expected {dim} coordinates, got {}",
                        parts.len()
                    )));
                }
                let mut p = [0.0; 3];
                for (a, t) in parts.iter().enumerate() {
                    p[a] = t
                        .trim()
                        .parse()
                        .map_err(|e| MorreyError::Config(format!("[{section}] {key}: {e}")))?;
                }
                Ok(Some(p))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_comments() {
        let text = "kind = norm\nseed = 7\n# comment\n[domain]\ndim = 1 ; trailing\nnodes = 33\nhalf_width = 1.0\n";
        let cfg = ExperimentConfig::from_text(text).unwrap();
        assert_eq!(cfg.kind, ExperimentKind::Norm);
        assert_eq!(cfg.seed, 7);
        let grid = cfg.grid().unwrap();
        assert_eq!(grid.nodes_per_axis, 33);
        assert_eq!(grid.dim(), 1);
    }

    #[test]
    fn reports_line_numbers_on_malformed_input() {
        let err = parse_config("kind = norm\nbogus line\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = parse_config("[unclosed\n").unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
    }

    #[test]
    fn missing_phi_block_is_a_config_error() {
        let cfg = ExperimentConfig::from_text("kind = norm\n").unwrap();
        assert!(matches!(cfg.phi(1), Err(MorreyError::Config(_))));
    }

    #[test]
    fn unknown_kind_rejected() {
        assert!(matches!(
            ExperimentConfig::from_text("kind = dance\n"),
            Err(MorreyError::Config(_))
        ));
    }

    #[test]
    fn phi_block_parses_power_family() {
        let text = "kind = norm\n[phi]\nfamily = power\nbeta = -0.5\np = 2\n";
        let cfg = ExperimentConfig::from_text(text).unwrap();
        let phi = cfg.phi(1).unwrap();
        assert!((phi.eval(4.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn function_specs_build() {
        let text = "kind = norm\nseed = 3\n[domain]\ndim = 1\nnodes = 17\nhalf_width = 1\n\
                    [f]\nkind = indicator\nradius = 0.5\n";
        let cfg = ExperimentConfig::from_text(text).unwrap();
        let grid = cfg.grid().unwrap();
        let f = cfg.function("f", grid).unwrap();
        assert_eq!(f.values[8], 1.0); // node at 0
        assert_eq!(f.values[0], 0.0);
        // random is deterministic per seed
        let text2 = text.replace("kind = indicator\nradius = 0.5", "kind = random");
        let cfg2 = ExperimentConfig::from_text(&text2).unwrap();
        let a = cfg2.function("f", grid).unwrap();
        let b = cfg2.function("f", grid).unwrap();
        assert_eq!(a.values, b.values);
    }
}
