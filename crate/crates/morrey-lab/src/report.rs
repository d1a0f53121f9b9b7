//! Report carriers shared by the norm, operator, solver, and SUCP modules,
//! plus the CSV/JSON serialization conventions.
//!
//! CSV: one row per node, columns `x1..xd,value`, header required, values in
//! full-precision decimal (17 significant digits). JSON: serde structs with
//! stable field order.

use crate::error::{MorreyError, Result};
use crate::grid::{Ball, GridFunction, UniformGrid};
use serde::Serialize;
use std::io::{BufRead, Write};

/// Witness of an extremal value.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind")]
pub enum Witness {
    Ball { center: Vec<f64>, radius: f64 },
    Node { coords: Vec<f64> },
    Member { label: String },
}

impl Witness {
    pub fn ball(b: &Ball, dim: usize) -> Self {
        Witness::Ball {
            center: b.center[..dim].to_vec(),
            radius: b.radius,
        }
    }
}

/// Description of the finite sweep a supremum was discretized over.
#[derive(Clone, Debug, Serialize)]
pub struct SweepInfo {
    pub ball_count: usize,
    pub r_min: f64,
    pub r_max: f64,
}

impl SweepInfo {
    pub fn of(sweep: &[Ball]) -> Self {
        let mut r_min = f64::INFINITY;
        let mut r_max = 0.0f64;
        for b in sweep {
            r_min = r_min.min(b.radius);
            r_max = r_max.max(b.radius);
        }
        SweepInfo {
            ball_count: sweep.len(),
            r_min,
            r_max,
        }
    }
}

/// Result of a norm evaluation: the max over the sweep and the ball
/// attaining it (first in sweep order on ties).
#[derive(Clone, Debug, Serialize)]
pub struct NormReport {
    pub name: String,
    pub value: f64,
    pub argmax: Witness,
    pub p: f64,
    pub phi: String,
    pub sweep: SweepInfo,
    #[serde(skip)]
    pub per_ball: Vec<f64>,
}

/// Uniform carrier for an empirically certified inequality.
#[derive(Clone, Debug, Serialize)]
pub struct InequalityReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// Smallest C making LHS <= C * RHS over the battery (or the max ratio).
    pub constant: f64,
    pub cap: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

impl InequalityReport {
    pub fn new(name: impl Into<String>) -> Self {
        InequalityReport {
            name: name.into(),
            lhs: 0.0,
            rhs: 0.0,
            constant: 0.0,
            cap: f64::INFINITY,
            pass: true,
            witness: None,
            sweep: None,
            seed: None,
            notes: Vec::new(),
        }
    }

    pub fn note(&mut self, msg: impl Into<String>) {
        self.notes.push(msg.into());
    }
}

/// 17-significant-digit decimal, the fixed precision of all CSV output.
pub fn fmt_full(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes a grid function as CSV (`x1..xd,value` header).
pub fn write_grid_csv<W: Write>(f: &GridFunction, mut out: W) -> Result<()> {
    let dim = f.grid.dim();
    let mut header: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
    header.push("value".into());
    writeln!(out, "{}", header.join(","))?;
    for i in 0..f.values.len() {
        let c = f.grid.coord(i);
        let mut row: Vec<String> = (0..dim).map(|a| fmt_full(c[a])).collect();
        row.push(fmt_full(f.values[i]));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Reads values back from CSV produced by [`write_grid_csv`] onto a known
/// grid; node order and coordinates are validated against the grid.
pub fn read_grid_csv<R: BufRead>(grid: UniformGrid, input: R) -> Result<GridFunction> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| MorreyError::invalid("empty CSV"))??;
    let dim = grid.dim();
    let expected_cols = dim + 1;
    if header.split(',').count() != expected_cols {
        return Err(MorreyError::invalid(format!(
            "CSV header has wrong column count, expected {expected_cols}"
        )));
    }
    let mut values = Vec::with_capacity(grid.node_count());
    for (row_idx, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != expected_cols {
            return Err(MorreyError::invalid(format!(
                "CSV row {} has {} columns, expected {expected_cols}",
                row_idx + 2,
                cols.len()
            )));
        }
        let expect = grid.coord(row_idx);
        for a in 0..dim {
            let x: f64 = cols[a]
                .trim()
                .parse()
                .map_err(|e| MorreyError::invalid(format!("CSV row {}: {e}", row_idx + 2)))?;
            if (x - expect[a]).abs() > 1e-9 * (1.0 + expect[a].abs()) {
                return Err(MorreyError::invalid(format!(
                    "CSV row {} coordinate mismatch with grid",
                    row_idx + 2
                )));
            }
        }
        let v: f64 = cols[dim]
            .trim()
            .parse()
            .map_err(|e| MorreyError::invalid(format!("CSV row {}: {e}", row_idx + 2)))?;
        values.push(v);
    }
    GridFunction::from_values(grid, values)
}
