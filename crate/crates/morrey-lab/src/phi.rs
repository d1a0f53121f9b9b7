//! The phi-function catalog and the G_p class verifier.
//!
//! A [`PhiSpec`] is the parameter object of the whole space M^{p,phi}:
//! a positive function of the ball radius together with its context (p, n).
//! Membership in G_p (almost decreasing, with t^{n/p} phi(t) almost
//! increasing) is certified *empirically on a finite grid*; the report
//! always records the grid it was checked on.

use crate::error::{MorreyError, Result};
use serde::Serialize;

#[derive(Clone, Debug, PartialEq)]
pub enum PhiFamily {
    /// phi(r) = r^beta
    Power { beta: f64 },
    /// phi(r) = r^beta (1 + |log r|)^gamma
    LogPower { beta: f64, gamma: f64 },
    /// piecewise log-log linear interpolation of sorted (r, phi(r)) pairs
    Table { radii: Vec<f64>, values: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhiSpec {
    pub family: PhiFamily,
    /// Lebesgue exponent context, p >= 1.
    pub p: f64,
    /// Growth order context, n > 0 (defaults to the dimension).
    pub n: f64,
}

impl PhiSpec {
    pub fn power(beta: f64, p: f64, n: f64) -> Result<Self> {
        check_context(p, n)?;
        Ok(PhiSpec {
            family: PhiFamily::Power { beta },
            p,
            n,
        })
    }

    pub fn log_power(beta: f64, gamma: f64, p: f64, n: f64) -> Result<Self> {
        check_context(p, n)?;
        Ok(PhiSpec {
            family: PhiFamily::LogPower { beta, gamma },
            p,
            n,
        })
    }

    pub fn table(radii: Vec<f64>, values: Vec<f64>, p: f64, n: f64) -> Result<Self> {
        check_context(p, n)?;
        if radii.len() != values.len() || radii.len() < 2 {
            return Err(MorreyError::invalid("phi table needs >= 2 (r, phi) pairs"));
        }
        if radii.windows(2).any(|w| w[0] >= w[1]) || radii[0] <= 0.0 {
            return Err(MorreyError::invalid("phi table radii must be positive and strictly increasing"));
        }
        if values.iter().any(|&v| v <= 0.0 || !v.is_finite()) {
            return Err(MorreyError::invalid("phi table values must be positive"));
        }
        Ok(PhiSpec {
            family: PhiFamily::Table { radii, values },
            p,
            n,
        })
    }

    /// The classical weight: phi(r) = r^{(lambda - n)/p} recovers M^{p,lambda}.
    pub fn from_lambda(lambda: f64, p: f64, n: f64) -> Result<Self> {
        PhiSpec::power((lambda - n) / p, p, n)
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        if r <= 0.0 || !r.is_finite() {
            return Err(MorreyError::invalid(format!("phi argument r = {r} must be positive")));
        }
        match &self.family {
            PhiFamily::Power { beta } => Ok(r.powf(*beta)),
            PhiFamily::LogPower { beta, gamma } => {
                Ok(r.powf(*beta) * (1.0 + r.ln().abs()).powf(*gamma))
            }
            PhiFamily::Table { radii, values } => {
                let lo = radii[0];
                let hi = *radii.last().unwrap();
                if r < lo * (1.0 - 1e-12) || r > hi * (1.0 + 1e-12) {
                    return Err(MorreyError::OutOfRange(format!(
                        "r = {r} outside phi table range [{lo}, {hi}]"
                    )));
                }
                let r = r.clamp(lo, hi);
                let idx = match radii.binary_search_by(|x| x.partial_cmp(&r).unwrap()) {
                    Ok(i) => return Ok(values[i]),
                    Err(i) => i,
                };
                let (r0, r1) = (radii[idx - 1], radii[idx]);
                let (v0, v1) = (values[idx - 1], values[idx]);
                let t = (r.ln() - r0.ln()) / (r1.ln() - r0.ln());
                Ok((v0.ln() * (1.0 - t) + v1.ln() * t).exp())
            }
        }
    }

    pub fn describe(&self) -> String {
        match &self.family {
            PhiFamily::Power { beta } => format!("power(beta={beta})"),
            PhiFamily::LogPower { beta, gamma } => format!("logpower(beta={beta},gamma={gamma})"),
            PhiFamily::Table { radii, .. } => format!("table({} pts)", radii.len()),
        }
    }
}

fn check_context(p: f64, n: f64) -> Result<()> {
    if p < 1.0 {
        return Err(MorreyError::invalid(format!("context p = {p} must be >= 1")));
    }
    if n <= 0.0 {
        return Err(MorreyError::invalid(format!("context n = {n} must be positive")));
    }
    Ok(())
}

/// Empirical G_p certificate over a finite radius grid.
#[derive(Clone, Debug, Serialize)]
pub struct GpReport {
    /// Smallest C >= 1 with phi(r) >= (1/C) phi(s) for all grid r <= s.
    pub almost_decreasing_constant: f64,
    /// Smallest C >= 1 with r^{n/p} phi(r) <= C s^{n/p} phi(s) for r <= s.
    pub almost_increasing_constant: f64,
    /// Max two-sided ratio over grid pairs with 1/2 <= r/s <= 2.
    pub doubling_constant: f64,
    pub r_grid: Vec<f64>,
    pub cap: f64,
    pub almost_decreasing_pass: bool,
    pub almost_increasing_pass: bool,
    pub doubling_pass: bool,
}

impl GpReport {
    pub fn pass(&self) -> bool {
        self.almost_decreasing_pass && self.almost_increasing_pass && self.doubling_pass
    }
}

/// Certifies the G_p conditions on `r_grid` against a constant cap.
pub fn check_gp(spec: &PhiSpec, r_grid: &[f64], cap: f64) -> Result<GpReport> {
    if r_grid.len() < 2 {
        return Err(MorreyError::invalid("G_p check needs >= 2 grid radii"));
    }
    if r_grid[0] <= 0.0 || r_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(MorreyError::invalid("G_p grid must be positive and sorted ascending"));
    }
    let phis: Vec<f64> = r_grid.iter().map(|&r| spec.eval(r)).collect::<Result<_>>()?;
    let np = spec.n / spec.p;

    let mut ad = 1.0f64;
    let mut ai = 1.0f64;
    let mut dc = 1.0f64;
    for i in 0..r_grid.len() {
        for j in i..r_grid.len() {
            let (r, s) = (r_grid[i], r_grid[j]);
            ad = ad.max(phis[j] / phis[i]);
            ai = ai.max(r.powf(np) * phis[i] / (s.powf(np) * phis[j]));
            let ratio = r / s;
            if (0.5..=2.0).contains(&ratio) {
                dc = dc.max((phis[i] / phis[j]).max(phis[j] / phis[i]));
            }
        }
    }
    Ok(GpReport {
        almost_decreasing_constant: ad,
        almost_increasing_constant: ai,
        doubling_constant: dc,
        r_grid: r_grid.to_vec(),
        cap,
        almost_decreasing_pass: ad <= cap,
        almost_increasing_pass: ai <= cap,
        doubling_pass: dc <= cap,
    })
}

/// Smallest C over the grid with int_r^inf phi(t) dt <= C r^{lambda+1-n}.
///
/// The tail is integrated numerically up to `r_cutoff` (composite Simpson in
/// log space) plus the closed-form remainder of the power envelope beyond it.
pub fn tail_integral_constant(
    spec: &PhiSpec,
    lambda: f64,
    r_grid: &[f64],
    r_cutoff: f64,
) -> Result<f64> {
    if lambda < 0.0 || lambda >= spec.n - 1.0 {
        return Err(MorreyError::invalid(format!(
            "need 0 <= lambda < n - 1, got lambda = {lambda}, n = {}",
            spec.n
        )));
    }
    if r_grid.is_empty() || r_grid[0] <= 0.0 {
        return Err(MorreyError::invalid("tail grid must be nonempty and positive"));
    }
    let remainder = match &spec.family {
        PhiFamily::Power { beta } => {
            if *beta >= -1.0 {
                return Err(MorreyError::DivergentTail(format!(
                    "power family with beta = {beta} >= -1"
                )));
            }
            r_cutoff.powf(beta + 1.0) / (-(beta + 1.0))
        }
        PhiFamily::LogPower { beta, gamma } => {
            if *beta >= -1.0 {
                return Err(MorreyError::DivergentTail(format!(
                    "log-power family with beta = {beta} >= -1"
                )));
            }
            // frozen-log power envelope beyond the cutoff
            (1.0 + r_cutoff.ln().abs()).powf(*gamma) * r_cutoff.powf(beta + 1.0) / (-(beta + 1.0))
        }
        // table phi is compactly supported on its range; nothing beyond it
        PhiFamily::Table { .. } => 0.0,
    };

    let mut c = 0.0f64;
    for &r in r_grid {
        let tail = integrate_phi(spec, r, r_cutoff)? + remainder;
        let bound = r.powf(lambda + 1.0 - spec.n);
        c = c.max(tail / bound);
    }
    Ok(c)
}

/// Composite Simpson in log space for int_a^b phi(t) dt.
fn integrate_phi(spec: &PhiSpec, a: f64, b: f64) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    let (a_eff, b_eff) = match &spec.family {
        PhiFamily::Table { radii, .. } => {
            let lo = radii[0];
            let hi = *radii.last().unwrap();
            (a.max(lo), b.min(hi))
        }
        _ => (a, b),
    };
    if b_eff <= a_eff {
        return Ok(0.0);
    }
    let n = 4096usize; // even
    let (la, lb) = (a_eff.ln(), b_eff.ln());
    let dh = (lb - la) / n as f64;
    // integrand after u = ln t substitution: phi(e^u) e^u
    let g = |u: f64| -> Result<f64> {
        let t = u.exp();
        Ok(spec.eval(t)? * t)
    };
    let mut s = g(la)? + g(lb)?;
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * g(la + k as f64 * dh)?;
    }
    Ok(s * dh / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dyadic_grid(lo_exp: i32, hi_exp: i32) -> Vec<f64> {
        (lo_exp..=hi_exp).map(|k| 2f64.powi(k)).collect()
    }

    #[test]
    fn eval_closed_forms() {
        let phi = PhiSpec::power(-0.5, 2.0, 1.0).unwrap();
        assert!((phi.eval(4.0).unwrap() - 0.5).abs() < 1e-15);

        let phi = PhiSpec::power(0.0, 1.0, 1.0).unwrap();
        assert!((phi.eval(17.3).unwrap() - 1.0).abs() < 1e-15);

        let phi = PhiSpec::log_power(-1.0, 1.0, 1.0, 1.0).unwrap();
        let e = std::f64::consts::E;
        assert!((phi.eval(e).unwrap() - 2.0 / e).abs() < 1e-12);
    }

    #[test]
    fn eval_rejects_bad_r() {
        let phi = PhiSpec::power(-0.5, 2.0, 1.0).unwrap();
        assert!(phi.eval(0.0).is_err());
        assert!(phi.eval(-1.0).is_err());
    }

    #[test]
    fn table_interpolates_power_law_exactly() {
        // log-log linear interpolation preserves power behavior
        let radii = vec![0.25, 0.5, 1.0, 2.0, 4.0];
        let values: Vec<f64> = radii.iter().map(|&r: &f64| r.powf(-0.5)).collect();
        let phi = PhiSpec::table(radii, values, 2.0, 1.0).unwrap();
        for r in [0.3, 0.7, 1.5, 3.0] {
            assert!((phi.eval(r).unwrap() - r.powf(-0.5)).abs() < 1e-12);
        }
        assert!(phi.eval(8.0).is_err());
        assert!(phi.eval(0.1).is_err());
    }

    #[test]
    fn gp_constants_closed_form() {
        let grid = dyadic_grid(-8, 8);
        let phi = PhiSpec::power(-0.5, 2.0, 1.0).unwrap();
        let rep = check_gp(&phi, &grid, 8.0).unwrap();
        assert!((rep.almost_decreasing_constant - 1.0).abs() < 1e-12);
        assert!((rep.almost_increasing_constant - 1.0).abs() < 1e-12);
        assert!((rep.doubling_constant - 2f64.sqrt()).abs() < 1e-12);
        assert!(rep.pass());

        let phi0 = PhiSpec::power(0.0, 1.0, 1.0).unwrap();
        let rep = check_gp(&phi0, &grid, 8.0).unwrap();
        assert!((rep.almost_decreasing_constant - 1.0).abs() < 1e-12);
        assert!((rep.almost_increasing_constant - 1.0).abs() < 1e-12);
        assert!((rep.doubling_constant - 1.0).abs() < 1e-12);
    }

    #[test]
    fn increasing_phi_fails_almost_decreasing() {
        let grid = dyadic_grid(-4, 4);
        let phi = PhiSpec::power(1.0, 1.0, 1.0).unwrap();
        let rep = check_gp(&phi, &grid, 8.0).unwrap();
        // ratio of grid endpoints: 2^4 / 2^-4 = 256
        assert!((rep.almost_decreasing_constant - 256.0).abs() < 1e-9);
        assert!(!rep.almost_decreasing_pass);
    }

    #[test]
    fn gp_rejects_bad_grid() {
        let phi = PhiSpec::power(0.0, 1.0, 1.0).unwrap();
        assert!(check_gp(&phi, &[1.0], 8.0).is_err());
        assert!(check_gp(&phi, &[2.0, 1.0], 8.0).is_err());
        assert!(check_gp(&phi, &[-1.0, 1.0], 8.0).is_err());
    }

    #[test]
    fn power_doubling_constant_matrix() {
        // doubling_constant = 2^{|beta|} for beta <= 0 with beta + n/p >= 0
        for &beta in &[0.0, -0.25, -0.5, -1.0] {
            let phi = PhiSpec::power(beta, 2.0, 2.0).unwrap();
            let rep = check_gp(&phi, &dyadic_grid(-6, 6), 1e9).unwrap();
            let expected = 2f64.powf(beta.abs());
            assert!(
                (rep.doubling_constant - expected).abs() <= 1e-12 * expected,
                "beta={beta}"
            );
        }
    }

    #[test]
    fn doubling_constant_scale_invariant() {
        let phi = PhiSpec::power(-0.5, 2.0, 1.0).unwrap();
        let g1 = dyadic_grid(-4, 2);
        let g2: Vec<f64> = g1.iter().map(|r| r * 3.0).collect();
        let d1 = check_gp(&phi, &g1, 1e9).unwrap().doubling_constant;
        let d2 = check_gp(&phi, &g2, 1e9).unwrap().doubling_constant;
        assert!((d1 - d2).abs() < 1e-12);
    }

    #[test]
    fn tail_constant_analytic_cases() {
        let grid = dyadic_grid(-3, 3);
        // phi = t^{-2}, n = 2, lambda = 0: tail = r^{-1} = r^{lambda+1-n}
        let phi = PhiSpec::power(-2.0, 1.0, 2.0).unwrap();
        let c = tail_integral_constant(&phi, 0.0, &grid, 1e8).unwrap();
        assert!((c - 1.0).abs() < 1e-8, "c={c}");

        // phi = t^{-3}, n = 2, lambda = 0: tail = r^{-2}/2 vs r^{-1}
        let phi = PhiSpec::power(-3.0, 1.0, 2.0).unwrap();
        let c = tail_integral_constant(&phi, 0.0, &grid, 1e8).unwrap();
        let expected = grid
            .iter()
            .map(|r| r.powi(-2) / (2.0 * r.powi(-1)))
            .fold(0.0f64, f64::max);
        assert!((c - expected).abs() < 1e-8 * expected.max(1.0), "c={c} expected={expected}");
    }

    #[test]
    fn tail_constant_power_identity() {
        // lambda + 1 - n = beta + 1 gives C = 1/|beta+1| exactly
        let beta = -2.5;
        let n = 3.0;
        let lambda = n + beta; // 0.5, inside [0, n-1)
        let phi = PhiSpec::power(beta, 1.0, n).unwrap();
        let c = tail_integral_constant(&phi, lambda, &dyadic_grid(-4, 4), 1e8).unwrap();
        assert!((c - 1.0 / 1.5).abs() < 1e-10, "c={c}");
    }

    #[test]
    fn divergent_tail_named() {
        let phi = PhiSpec::power(-0.5, 1.0, 2.0).unwrap();
        match tail_integral_constant(&phi, 0.0, &[1.0], 1e6) {
            Err(MorreyError::DivergentTail(msg)) => assert!(msg.contains("-0.5")),
            other => panic!("expected divergent tail, got {other:?}"),
        }
    }
}
