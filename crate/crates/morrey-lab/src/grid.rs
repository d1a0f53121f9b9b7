//! Uniform grids, ball geometry, the reference measure, and quadrature.
//!
//! Everything downstream (norms, operators, solvers) computes on a
//! [`GridFunction`]: real samples on a uniform vertex-centered grid over a
//! box or ball domain in dimension 1..=3. Quadrature is the first-order
//! node-sum rule with weight `h^d`; a node contributes to a ball integral
//! when it lies strictly inside the ball and inside the domain.

use crate::error::{MorreyError, Result};
use crate::par;
use serde::Serialize;
use std::f64::consts::PI;

/// Point in R^d, padded with zeros beyond the active dimension.
pub type Point = [f64; 3];

/// Euclidean distance over the first `dim` components.
#[inline]
pub fn dist(a: &Point, b: &Point, dim: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..dim {
        let t = a[i] - b[i];
        s += t * t;
    }
    s.sqrt()
}

/// Volume of the unit ball in R^d.
pub fn unit_ball_volume(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => unreachable!("dimension checked at construction"),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Shape {
    /// Axis-aligned box with equal extent per axis (so the grid spacing is
    /// a single scalar).
    Box { lo: Point, hi: Point },
    /// Ball; the grid covers its bounding box and nodes outside the ball
    /// are treated as outside the domain.
    Ball { center: Point, radius: f64 },
}

/// Bounded open set Omega in R^d.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Domain {
    pub dim: usize,
    pub shape: Shape,
}

impl Domain {
    pub fn new_box(dim: usize, lo: Point, hi: Point) -> Result<Self> {
        check_dim(dim)?;
        let ext0 = hi[0] - lo[0];
        for i in 0..dim {
            let ext = hi[i] - lo[i];
            if ext <= 0.0 || !ext.is_finite() {
                return Err(MorreyError::invalid(format!(
                    "box extent on axis {i} must be positive, got {ext}"
                )));
            }
            if (ext - ext0).abs() > 1e-12 * ext0 {
                return Err(MorreyError::invalid(
                    "box extents must be equal per axis (uniform spacing)",
                ));
            }
        }
        Ok(Domain {
            dim,
            shape: Shape::Box { lo, hi },
        })
    }

    /// The box [-half, half]^d.
    pub fn symmetric_box(dim: usize, half: f64) -> Result<Self> {
        if half <= 0.0 {
            return Err(MorreyError::invalid("half-extent must be positive"));
        }
        Domain::new_box(dim, [-half; 3], [half; 3])
    }

    pub fn ball(dim: usize, center: Point, radius: f64) -> Result<Self> {
        check_dim(dim)?;
        if radius <= 0.0 || !radius.is_finite() {
            return Err(MorreyError::invalid("ball radius must be positive"));
        }
        Ok(Domain {
            dim,
            shape: Shape::Ball { center, radius },
        })
    }

    /// Exact geometric diameter.
    pub fn diameter(&self) -> f64 {
        match self.shape {
            Shape::Box { lo, hi } => {
                let mut s = 0.0;
                for i in 0..self.dim {
                    let t = hi[i] - lo[i];
                    s += t * t;
                }
                s.sqrt()
            }
            Shape::Ball { radius, .. } => 2.0 * radius,
        }
    }

    /// Lower corner of the bounding box.
    pub fn bounding_lo(&self) -> Point {
        match self.shape {
            Shape::Box { lo, .. } => lo,
            Shape::Ball { center, radius } => {
                let mut p = [0.0; 3];
                for i in 0..self.dim {
                    p[i] = center[i] - radius;
                }
                p
            }
        }
    }

    /// Per-axis extent of the bounding box (equal on all axes).
    pub fn extent(&self) -> f64 {
        match self.shape {
            Shape::Box { lo, hi } => hi[0] - lo[0],
            Shape::Ball { radius, .. } => 2.0 * radius,
        }
    }

    #[inline]
    pub fn contains(&self, x: &Point) -> bool {
        match self.shape {
            Shape::Box { lo, hi } => {
                (0..self.dim).all(|i| x[i] >= lo[i] - 1e-12 && x[i] <= hi[i] + 1e-12)
            }
            Shape::Ball { center, radius } => dist(x, &center, self.dim) < radius,
        }
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if (1..=3).contains(&dim) {
        Ok(())
    } else {
        Err(MorreyError::UnsupportedDimension(format!(
            "dimension {dim} not in 1..=3"
        )))
    }
}

/// Vertex-centered uniform grid: `nodes_per_axis` nodes on each axis of the
/// bounding box, spacing `h = extent / (nodes_per_axis - 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UniformGrid {
    pub domain: Domain,
    pub nodes_per_axis: usize,
    pub h: f64,
}

impl UniformGrid {
    pub fn new(domain: Domain, nodes_per_axis: usize) -> Result<Self> {
        if nodes_per_axis < 2 {
            return Err(MorreyError::invalid("need at least 2 nodes per axis"));
        }
        let h = domain.extent() / (nodes_per_axis - 1) as f64;
        Ok(UniformGrid {
            domain,
            nodes_per_axis,
            h,
        })
    }

    pub fn dim(&self) -> usize {
        self.domain.dim
    }

    pub fn node_count(&self) -> usize {
        self.nodes_per_axis.pow(self.dim() as u32)
    }

    /// Quadrature weight of one node.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim() as i32)
    }

    /// Tensor-product trapezoidal quadrature weight of a node: h^d with a
    /// factor 1/2 per axis on which the node sits on the boundary plane.
    pub fn quad_weight(&self, flat: usize) -> f64 {
        let mi = self.multi(flat);
        let m = self.nodes_per_axis;
        let mut w = self.cell_volume();
        for a in 0..self.dim() {
            if mi[a] == 0 || mi[a] == m - 1 {
                w *= 0.5;
            }
        }
        w
    }

    /// Flat index from a multi-index; axis 0 is the slowest so flat order is
    /// lexicographic in (i0, i1, i2).
    #[inline]
    pub fn flat(&self, mi: [usize; 3]) -> usize {
        let m = self.nodes_per_axis;
        match self.dim() {
            1 => mi[0],
            2 => mi[0] * m + mi[1],
            _ => (mi[0] * m + mi[1]) * m + mi[2],
        }
    }

    #[inline]
    pub fn multi(&self, flat: usize) -> [usize; 3] {
        let m = self.nodes_per_axis;
        match self.dim() {
            1 => [flat, 0, 0],
            2 => [flat / m, flat % m, 0],
            _ => [flat / (m * m), (flat / m) % m, flat % m],
        }
    }

    #[inline]
    pub fn coord(&self, flat: usize) -> Point {
        let mi = self.multi(flat);
        let lo = self.domain.bounding_lo();
        let mut p = [0.0; 3];
        for i in 0..self.dim() {
            p[i] = lo[i] + mi[i] as f64 * self.h;
        }
        p
    }

    /// Multi-index of the node nearest to `x`.
    pub fn nearest_node(&self, x: &Point) -> [usize; 3] {
        let lo = self.domain.bounding_lo();
        let mut mi = [0usize; 3];
        for i in 0..self.dim() {
            let t = ((x[i] - lo[i]) / self.h).round();
            mi[i] = t.clamp(0.0, (self.nodes_per_axis - 1) as f64) as usize;
        }
        mi
    }

    /// Visits every node whose coordinate lies strictly inside the ball,
    /// scanning only the index window that can intersect it.
    pub fn for_nodes_in_ball(&self, ball: &Ball, mut visit: impl FnMut(usize, &Point)) {
        let dim = self.dim();
        let lo = self.domain.bounding_lo();
        let m = self.nodes_per_axis;
        let mut lo_i = [0usize; 3];
        let mut hi_i = [0usize; 3];
        for a in 0..dim {
            let l = ((ball.center[a] - ball.radius - lo[a]) / self.h).floor();
            let u = ((ball.center[a] + ball.radius - lo[a]) / self.h).ceil();
            lo_i[a] = l.max(0.0) as usize;
            hi_i[a] = (u.min((m - 1) as f64)).max(0.0) as usize;
            if l > (m - 1) as f64 || u < 0.0 {
                return; // ball misses the grid entirely
            }
        }
        let r2 = ball.radius * ball.radius;
        let mut mi = [0usize; 3];
        let (j_lo, j_hi) = if dim >= 2 { (lo_i[1], hi_i[1]) } else { (0, 0) };
        let (k_lo, k_hi) = if dim >= 3 { (lo_i[2], hi_i[2]) } else { (0, 0) };
        for i in lo_i[0]..=hi_i[0] {
            mi[0] = i;
            for j in j_lo..=j_hi {
                mi[1] = j;
                for k in k_lo..=k_hi {
                    mi[2] = k;
                    let flat = self.flat(mi);
                    let p = self.coord(flat);
                    let mut d2 = 0.0;
                    for a in 0..dim {
                        let t = p[a] - ball.center[a];
                        d2 += t * t;
                    }
                    if d2 < r2 {
                        visit(flat, &p);
                    }
                }
            }
        }
    }
}

/// Real-valued samples on a grid; the universal carrier for f, u, V, z.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub grid: UniformGrid,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn from_values(grid: UniformGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(MorreyError::invalid(format!(
                "value count {} does not match node count {}",
                values.len(),
                grid.node_count()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(MorreyError::invalid("grid function has non-finite values"));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn from_fn(grid: UniformGrid, f: impl Fn(&Point) -> f64 + Sync) -> Result<Self> {
        let values = par::map_indexed(grid.node_count(), |i| f(&grid.coord(i)));
        GridFunction::from_values(grid, values)
    }

    pub fn constant(grid: UniformGrid, c: f64) -> Result<Self> {
        GridFunction::from_values(grid, vec![c; grid.node_count()])
    }

    pub fn zeros(grid: UniformGrid) -> Self {
        GridFunction {
            grid,
            values: vec![0.0; grid.node_count()],
        }
    }

    pub fn scale(&self, c: f64) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        if self.grid != other.grid {
            return Err(MorreyError::invalid("grid mismatch"));
        }
        Ok(GridFunction {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn mul(&self, other: &GridFunction) -> Result<GridFunction> {
        if self.grid != other.grid {
            return Err(MorreyError::invalid("grid mismatch"));
        }
        Ok(GridFunction {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .collect(),
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Integral of |f|^p over the whole domain (node-sum rule).
    pub fn integral_abs_pow(&self, p: f64) -> f64 {
        let w = self.grid.cell_volume();
        let dom = self.grid.domain;
        let mut s = 0.0;
        for i in 0..self.values.len() {
            if dom.contains(&self.grid.coord(i)) {
                s += self.values[i].abs().powf(p);
            }
        }
        s * w
    }
}

/// Open ball B(a, r).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if radius <= 0.0 || !radius.is_finite() {
            return Err(MorreyError::invalid("ball radius must be positive"));
        }
        Ok(Ball { center, radius })
    }
}

/// Reference measure. Only Lebesgue in v1: growth order n = d and
/// mu(B(a,r)) = v_d r^d in closed form. n stays a symbolic parameter so the
/// formulas downstream never hard-code it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasureSpec {
    pub dim: usize,
    /// Growth order n, 0 < n <= d.
    pub n: f64,
    /// Growth constant C with mu(B(a,r)) <= C r^n.
    pub growth_constant: f64,
}

impl MeasureSpec {
    pub fn lebesgue(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(MeasureSpec {
            dim,
            n: dim as f64,
            growth_constant: unit_ball_volume(dim),
        })
    }
}

/// mu(B(a,r)) in closed form (not quadrature).
pub fn ball_measure(ball: &Ball, measure: &MeasureSpec) -> Result<f64> {
    if ball.radius <= 0.0 {
        return Err(MorreyError::invalid("ball radius must be positive"));
    }
    Ok(unit_ball_volume(measure.dim) * ball.radius.powi(measure.dim as i32))
}

/// Node-sum approximation of the integral of |f|^p over B(a,r) ∩ Omega.
/// Empty intersection gives 0.
pub fn integrate_ball(f: &GridFunction, ball: &Ball, p: f64) -> Result<f64> {
    if p < 1.0 {
        return Err(MorreyError::invalid(format!("exponent p = {p} < 1")));
    }
    let grid = &f.grid;
    let dom = grid.domain;
    let mut s = 0.0;
    grid.for_nodes_in_ball(ball, |flat, x| {
        if dom.contains(x) {
            s += f.values[flat].abs().powf(p);
        }
    });
    Ok(s * grid.cell_volume())
}

/// Trapezoid-weighted integral of |f|^p over the whole bounding box
/// (second-order accurate on box domains, in contrast to the first-order
/// clipped node sums over balls).
pub fn integrate_domain(f: &GridFunction, p: f64) -> Result<f64> {
    if p < 1.0 {
        return Err(MorreyError::invalid(format!("exponent p = {p} < 1")));
    }
    let grid = &f.grid;
    let mut s = 0.0;
    for i in 0..grid.node_count() {
        s += f.values[i].abs().powf(p) * grid.quad_weight(i);
    }
    Ok(s)
}

/// Geometric radius ladder r_min * ratio^k, k = 0, 1, ... capped by r_max.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadiusLadder {
    pub r_min: f64,
    pub r_max: f64,
    pub ratio: f64,
}

impl RadiusLadder {
    pub fn new(r_min: f64, r_max: f64, ratio: f64) -> Result<Self> {
        if r_min <= 0.0 {
            return Err(MorreyError::invalid("ladder r_min must be positive"));
        }
        if r_min >= r_max {
            return Err(MorreyError::invalid("ladder needs r_min < r_max"));
        }
        if ratio <= 1.0 {
            return Err(MorreyError::invalid("ladder ratio must exceed 1"));
        }
        Ok(RadiusLadder {
            r_min,
            r_max,
            ratio,
        })
    }

    /// Doubling ladder (ratio 2), the default shape.
    pub fn doubling(r_min: f64, r_max: f64) -> Result<Self> {
        RadiusLadder::new(r_min, r_max, 2.0)
    }

    pub fn radii(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut r = self.r_min;
        while r <= self.r_max * (1.0 + 1e-9) {
            out.push(r);
            r *= self.ratio;
        }
        out
    }
}

/// Discretizes the supremum over balls: Cartesian product of every
/// `center_stride`-th grid node with every ladder radius, lexicographic
/// centers then ascending radii.
pub fn ball_sweep(grid: &UniformGrid, center_stride: usize, ladder: &RadiusLadder) -> Result<Vec<Ball>> {
    if center_stride == 0 {
        return Err(MorreyError::invalid("center stride must be positive"));
    }
    if ladder.r_max > grid.domain.diameter() * (1.0 + 1e-9) {
        return Err(MorreyError::invalid(
            "ladder r_max exceeds the domain diameter",
        ));
    }
    let radii = ladder.radii();
    let mut balls = Vec::new();
    let mut flat = 0;
    while flat < grid.node_count() {
        let c = grid.coord(flat);
        for &r in &radii {
            balls.push(Ball { center: c, radius: r });
        }
        flat += center_stride;
    }
    Ok(balls)
}

/// Per-axis derivative: central differences in the interior, second-order
/// one-sided at the boundary. Exact for affine functions.
pub fn gradient(f: &GridFunction) -> Result<Vec<GridFunction>> {
    let grid = &f.grid;
    let m = grid.nodes_per_axis;
    if m < 3 {
        return Err(MorreyError::invalid("gradient needs at least 3 nodes per axis"));
    }
    let h = grid.h;
    let dim = grid.dim();
    let mut out = Vec::with_capacity(dim);
    for axis in 0..dim {
        let values = par::map_indexed(grid.node_count(), |flat| {
            let mi = grid.multi(flat);
            let i = mi[axis];
            let at = |ii: usize| {
                let mut mj = mi;
                mj[axis] = ii;
                f.values[grid.flat(mj)]
            };
            if i == 0 {
                (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h)
            } else if i == m - 1 {
                (3.0 * at(m - 1) - 4.0 * at(m - 2) + at(m - 3)) / (2.0 * h)
            } else {
                (at(i + 1) - at(i - 1)) / (2.0 * h)
            }
        });
        out.push(GridFunction { grid: *grid, values });
    }
    Ok(out)
}

/// Pointwise Euclidean norm of the gradient, |grad f|.
pub fn gradient_magnitude(f: &GridFunction) -> Result<GridFunction> {
    let comps = gradient(f)?;
    let n = f.values.len();
    let values = (0..n)
        .map(|i| {
            comps
                .iter()
                .map(|c| c.values[i] * c.values[i])
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    Ok(GridFunction {
        grid: f.grid,
        values,
    })
}
