//! The acceptance battery: thirteen oracle- and property-based criteria run
//! at desk scale, one verdict line each. `run_suite` is both the `suite` CLI
//! subcommand and the backing of the `acceptance` integration test.

use crate::battery::{compact_battery, standard_battery, Battery};
use crate::config::ExperimentConfig;
use crate::error::{MorreyError, Result};
use crate::grid::{
    ball_sweep, dist, gradient_magnitude, integrate_domain, Ball, Domain, GridFunction,
    RadiusLadder, UniformGrid,
};
use crate::norms::{
    classical_morrey_norm, embedding_check, indicator_bounds_check, minkowski_check, morrey_norm,
};
use crate::operators::{default_maximal_ladder, hedberg_check, maximal_function, riesz_potential};
use crate::pde::{
    caccioppoli_check, fefferman_check, plaplace_energy_grad, sigma_split_curve,
    solve_linear_elliptic, solve_plaplace, solve_poisson, PLaplaceProblem, PoissonProblem,
    SolveOpts,
};
use crate::phi::PhiSpec;
use crate::runner::execute_run;
use crate::sucp::{
    classify_profile, mass_function, sucp_experiment, vanishing_order,
    Classification, DEFAULT_GROWTH_CAP,
};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub index: usize,
    pub name: String,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteOutcome {
    pub criteria: Vec<CriterionResult>,
    pub all_pass: bool,
    pub total_seconds: f64,
}

const SEED: u64 = 20_240_817;

/// Runs all thirteen criteria, printing one verdict line each, and writes
/// `suite_report.json` into `out_dir`.
pub fn run_suite(out_dir: &Path) -> Result<SuiteOutcome> {
    std::fs::create_dir_all(out_dir)?;
    let start = Instant::now();
    let criteria: Vec<(&str, fn(&Path) -> Result<(bool, String)>)> = vec![
        ("norm axioms", c01_norm_axioms),
        ("bridge identity", c02_bridge_identity),
        ("indicator sandwich", c03_indicator_sandwich),
        ("embedding equivalence", c04_embedding_equivalence),
        ("maximal operator oracle", c05_maximal_oracle),
        ("riesz accuracy", c06_riesz_accuracy),
        ("hedberg certification", c07_hedberg),
        ("poisson solver", c08_poisson),
        ("p-laplace solver", c09_plaplace),
        ("fefferman certification", c10_fefferman),
        ("caccioppoli independence", c11_caccioppoli),
        ("sucp machinery", c12_sucp),
        ("suite determinism", c13_determinism),
    ];
    let mut results = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let index = i + 1;
        let t0 = Instant::now();
        let (pass, detail) = match f(out_dir) {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        let seconds = t0.elapsed().as_secs_f64();
        println!(
            "[{index:2}/13] {} {name} ({seconds:.1}s) {detail}",
            if pass { "PASS" } else { "FAIL" }
        );
        results.push(CriterionResult {
            index,
            name: name.to_string(),
            pass,
            detail,
            seconds,
        });
    }
    let outcome = SuiteOutcome {
        all_pass: results.iter().all(|c| c.pass),
        total_seconds: start.elapsed().as_secs_f64(),
        criteria: results,
    };
    std::fs::write(
        out_dir.join("suite_report.json"),
        serde_json::to_string_pretty(&outcome)?,
    )?;
    Ok(outcome)
}

fn grid1d(half: f64, m: usize) -> Result<UniformGrid> {
    UniformGrid::new(Domain::symmetric_box(1, half)?, m)
}

fn grid2d(half: f64, m: usize) -> Result<UniformGrid> {
    UniformGrid::new(Domain::symmetric_box(2, half)?, m)
}

/// 1. Homogeneity to 1e-12 relative and triangle-inequality slack
/// >= -1e-12 on a 30-function seeded battery; under 30 s.
fn c01_norm_axioms(_: &Path) -> Result<(bool, String)> {
    let t0 = Instant::now();
    let grid = grid1d(1.0, 129)?;
    let battery = standard_battery(grid, SEED, 30)?;
    let phi = PhiSpec::power(-0.25, 2.0, 1.0)?;
    let sweep = ball_sweep(&grid, 16, &RadiusLadder::doubling(0.125, 1.0)?)?;
    let mut worst_hom = 0.0f64;
    let mut worst_slack = f64::INFINITY;
    for (_, f) in &battery.members {
        let n = morrey_norm(f, 2.0, &phi, &sweep)?.value;
        let scaled = morrey_norm(&f.scale(2.5), 2.0, &phi, &sweep)?.value;
        if n > 0.0 {
            worst_hom = worst_hom.max((scaled - 2.5 * n).abs() / (2.5 * n));
        } else if scaled != 0.0 {
            worst_hom = f64::INFINITY;
        }
    }
    for pair in battery.members.windows(2) {
        let rep = minkowski_check(&pair[0].1, &pair[1].1, 2.0, &phi, &sweep)?;
        // slack = ||f|| + ||g|| - ||f+g||, normalized by the scale
        let scale = rep.rhs.max(1.0);
        worst_slack = worst_slack.min((rep.rhs - rep.lhs) / scale);
        if !rep.pass {
            return Ok((false, format!("triangle inequality violated: {:?}", rep.notes)));
        }
    }
    let elapsed = t0.elapsed().as_secs_f64();
    let pass = worst_hom <= 1e-12 && worst_slack >= -1e-12 && elapsed < 30.0;
    Ok((
        pass,
        format!(
            "homogeneity err {worst_hom:.2e}, min triangle slack {worst_slack:.2e}, {elapsed:.1}s"
        ),
    ))
}

/// 2. classical_morrey_norm equals morrey_norm with phi(r) = r^{(lambda-n)/p}
/// to 1e-12 on 10 battery members.
fn c02_bridge_identity(_: &Path) -> Result<(bool, String)> {
    let grid = grid1d(1.0, 129)?;
    let battery = standard_battery(grid, SEED + 1, 10)?;
    let (p, lambda, n) = (2.0, 0.5, 1.0);
    let phi = PhiSpec::from_lambda(lambda, p, n)?;
    let sweep = ball_sweep(&grid, 16, &RadiusLadder::doubling(0.125, 1.0)?)?;
    let mut worst = 0.0f64;
    for (_, f) in &battery.members {
        let a = classical_morrey_norm(f, p, lambda, &sweep)?.value;
        let b = morrey_norm(f, p, &phi, &sweep)?.value;
        if a > 0.0 {
            worst = worst.max((a - b).abs() / a);
        } else if b != 0.0 {
            worst = f64::INFINITY;
        }
    }
    Ok((worst <= 1e-12, format!("max relative gap {worst:.2e}")))
}

/// 3. Indicator sandwich: exact quadrature lower bound, and upper constant
/// stable within 10% under sweep refinement, for r0 in {0.25, 0.5, 1}.
fn c03_indicator_sandwich(_: &Path) -> Result<(bool, String)> {
    let grid = grid1d(2.0, 257)?;
    let phi = PhiSpec::power(-0.25, 2.0, 1.0)?;
    let coarse = ball_sweep(&grid, 32, &RadiusLadder::doubling(0.25, 2.0)?)?;
    let fine = ball_sweep(&grid, 16, &RadiusLadder::new(0.25, 2.0, std::f64::consts::SQRT_2)?)?;
    let mut detail = String::new();
    let mut pass = true;
    for r0 in [0.25, 0.5, 1.0] {
        let a = indicator_bounds_check(r0, 2.0, &phi, &coarse, grid, f64::INFINITY)?;
        let b = indicator_bounds_check(r0, 2.0, &phi, &fine, grid, f64::INFINITY)?;
        // the lower bound must hold exactly on both sweeps
        pass &= a.lhs <= a.rhs && b.lhs <= b.rhs;
        let drift = (b.constant - a.constant).abs() / a.constant;
        pass &= drift <= 0.10;
        write!(detail, "r0={r0}: C={:.4}, drift {:.1}%; ", a.constant, 100.0 * drift).ok();
    }
    Ok((pass, detail))
}

/// 4. Finiteness of the phi-ratio constant C_I coincides with boundedness of
/// the norm-comparison constant C_II on 5 (phi1, phi2) pairs.
fn c04_embedding_equivalence(_: &Path) -> Result<(bool, String)> {
    let grid = grid1d(1.0, 257)?;
    // battery with small-ball indicators so C_II can actually blow up
    let mut members = Vec::new();
    for rho in [1.0 / 32.0, 1.0 / 16.0, 1.0 / 8.0, 1.0 / 4.0] {
        members.push((
            format!("indicator_{rho}"),
            GridFunction::from_fn(grid, move |x| if x[0].abs() < rho { 1.0 } else { 0.0 })?,
        ));
    }
    members.push((
        "gaussian".into(),
        GridFunction::from_fn(grid, |x| (-x[0] * x[0] / 0.09).exp())?,
    ));
    let battery = Battery {
        members,
        seed: SEED,
    };
    let mut sweep = Vec::new();
    let mut r = 1.0 / 32.0;
    while r <= 1.0 {
        sweep.push(Ball::new([0.0; 3], r)?);
        sweep.push(Ball::new([0.5, 0.0, 0.0], r.min(0.5))?);
        r *= 2.0;
    }
    // (beta1, beta2) pairs inside G_p for p = 2, n = 1; cap 4 splits the
    // bounded pairs from the r^{-1/2} blow-up pair
    let pairs = [(0.0, 0.0), (-0.5, -0.5), (-0.25, -0.5), (0.0, -0.5), (-0.5, 0.0)];
    let mut pass = true;
    let mut detail = String::new();
    for (b1, b2) in pairs {
        let phi1 = PhiSpec::power(b1, 2.0, 1.0)?;
        let phi2 = PhiSpec::power(b2, 2.0, 1.0)?;
        let rep = embedding_check(2.0, &phi1, 2.0, &phi2, &battery, &sweep, 4.0)?;
        pass &= rep.pass;
        write!(detail, "({b1},{b2}): C_I={:.2} C_II={:.2} agree={}; ", rep.lhs, rep.rhs, rep.pass)
            .ok();
    }
    Ok((pass, detail))
}

/// 5. Maximal operator vs a dense brute-force search, and the analytic value
/// M chi_{(-1,1)}(2) = 1/3 +- 0.02.
fn c05_maximal_oracle(_: &Path) -> Result<(bool, String)> {
    let grid = grid1d(4.0, 161)?;
    let f = GridFunction::from_fn(grid, |x| if x[0].abs() < 1.0 { 1.0 } else { 0.0 })?;
    // coarse geometric ladder vs a dense superset spanning the same range
    let coarse: Vec<f64> = std::iter::successors(Some(0.25f64), |r| Some(r * 1.3))
        .take_while(|&r| r <= 8.0)
        .collect();
    let mut dense: Vec<f64> = std::iter::successors(Some(0.25f64), |r| Some(r * 1.05))
        .take_while(|&r| r <= 8.0)
        .collect();
    dense.extend_from_slice(&coarse);
    dense.sort_by(f64::total_cmp);
    let mc = maximal_function(&f, &coarse)?;
    let md = maximal_function(&f, &dense)?;
    // between coarse rungs r and 1.3r, any average is bounded by the upper
    // rung's average times 1.3 (numerator monotone, denominator >= 2rho)
    // times 1 + h/2r for the volume floor of the counted node cells
    let cap = 1.3 * (1.0 + grid.h / (2.0 * 0.25));
    let mut pass = true;
    let mut worst = 0.0f64;
    for i in 0..grid.node_count() {
        let (c, d) = (mc.output.values[i], md.output.values[i]);
        // coarse <= dense (max over a superset) <= cap * coarse
        pass &= c <= d * (1.0 + 1e-12) && d <= cap * c * (1.0 + 1e-12);
        if c > 0.0 {
            worst = worst.max(d / c);
        }
    }
    // the analytic point value, with a ladder containing the argmax r = 3
    let ladder = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 5.0, 6.0];
    let m = maximal_function(&f, &ladder)?;
    let at2 = m.output.values[grid.flat(grid.nearest_node(&[2.0, 0.0, 0.0]))];
    pass &= (at2 - 1.0 / 3.0).abs() <= 0.02;
    Ok((
        pass,
        format!("max dense/coarse ratio {worst:.3} (cap {cap:.2}), M(2) = {at2:.4}"),
    ))
}

/// 6. I_1 chi_{B(0,1)}(0) = 2 pi +- 3% in d = 2 at h = 1/64; linearity to 1e-10.
fn c06_riesz_accuracy(_: &Path) -> Result<(bool, String)> {
    let grid = grid2d(1.0, 129)?; // h = 1/64
    let chi = GridFunction::from_fn(grid, |x| {
        if dist(x, &[0.0; 3], 2) < 1.0 {
            1.0
        } else {
            0.0
        }
    })?;
    let i1 = riesz_potential(&chi, 1.0)?;
    let at0 = i1.output.values[grid.flat(grid.nearest_node(&[0.0; 3]))];
    let target = 2.0 * std::f64::consts::PI;
    let rel = (at0 - target).abs() / target;

    // linearity on a smaller grid
    let g = grid2d(1.0, 33)?;
    let a = GridFunction::from_fn(g, |x| (x[0] + 0.3 * x[1]).cos())?;
    let b = GridFunction::from_fn(g, |x| x[0] * x[0] - x[1])?;
    let sum = a.add(&b)?;
    let ia = riesz_potential(&a, 1.0)?.output;
    let ib = riesz_potential(&b, 1.0)?.output;
    let isum = riesz_potential(&sum, 1.0)?.output;
    let mut lin_err = 0.0f64;
    for i in 0..g.node_count() {
        lin_err = lin_err.max((isum.values[i] - ia.values[i] - ib.values[i]).abs());
    }
    let pass = rel <= 0.03 && lin_err <= 1e-10;
    Ok((
        pass,
        format!("I_1 chi(0) = {at0:.4} ({:.2}% off 2pi), linearity err {lin_err:.2e}", 100.0 * rel),
    ))
}

fn hedberg_constant(m: usize) -> Result<f64> {
    let grid = grid2d(1.0, m)?;
    let phi = PhiSpec::power(-1.6, 2.0, 2.0)?;
    let sweep = ball_sweep(&grid, (m - 1) / 4, &RadiusLadder::doubling(0.25, 2.0)?)?;
    let ladder = default_maximal_ladder(&grid);
    let members = [
        GridFunction::from_fn(grid, |x| (-dist(x, &[0.0; 3], 2).powi(2) / 0.09).exp())?,
        GridFunction::from_fn(grid, |x| {
            (-dist(x, &[0.2, -0.1, 0.0], 2).powi(2) / 0.04).exp()
        })?,
        GridFunction::from_fn(grid, |x| if dist(x, &[0.0; 3], 2) < 0.5 { 1.0 } else { 0.0 })?,
    ];
    let mut c = 0.0f64;
    for f in &members {
        let rep = hedberg_check(f, 2.0, &phi, 0.5, &sweep, &ladder, f64::INFINITY)?;
        c = c.max(rep.constant);
    }
    Ok(c)
}

/// 7. Empirical Hedberg constant finite and stable within 10% under one
/// refinement; hypothesis-violating phi rejected with the distinct error.
fn c07_hedberg(_: &Path) -> Result<(bool, String)> {
    let c_coarse = hedberg_constant(33)?;
    let c_fine = hedberg_constant(65)?;
    let drift = (c_fine - c_coarse).abs() / c_coarse;
    let mut pass = c_coarse.is_finite() && c_fine.is_finite() && drift <= 0.10;

    // divergent-tail phi must surface as the hypothesis violation
    let grid = grid2d(1.0, 33)?;
    let f = GridFunction::constant(grid, 1.0)?;
    let bad_phi = PhiSpec::power(-0.5, 2.0, 2.0)?;
    let sweep = ball_sweep(&grid, 8, &RadiusLadder::doubling(0.25, 2.0)?)?;
    let ladder = default_maximal_ladder(&grid);
    let rejected = matches!(
        hedberg_check(&f, 2.0, &bad_phi, 0.5, &sweep, &ladder, 1.0),
        Err(MorreyError::HypothesisViolation(_))
    );
    pass &= rejected;
    Ok((
        pass,
        format!("C = {c_coarse:.4} -> {c_fine:.4} ({:.1}% drift), bad phi rejected: {rejected}", 100.0 * drift),
    ))
}

/// 8. Poisson: 1D z(0) = 0.5 +- 1e-10; 2D disk z(0) = 0.25 +- 2% at h = 1/64;
/// convergence slope in [1.9, 2.1]; under 60 s.
fn c08_poisson(_: &Path) -> Result<(bool, String)> {
    let t0 = Instant::now();
    let g1 = grid1d(1.0, 129)?;
    let sol1 = solve_poisson(&PoissonProblem {
        source: GridFunction::constant(g1, 1.0)?,
    })?;
    let z1 = sol1.u.values[g1.flat(g1.nearest_node(&[0.0; 3]))];
    let err1 = (z1 - 0.5).abs();

    let dom = Domain::ball(2, [0.0; 3], 1.0)?;
    let g2 = UniformGrid::new(dom, 129)?; // h = 1/64
    let sol2 = solve_poisson(&PoissonProblem {
        source: GridFunction::constant(g2, 1.0)?,
    })?;
    let z2 = sol2.u.values[g2.flat(g2.nearest_node(&[0.0; 3]))];
    let err2 = (z2 - 0.25).abs() / 0.25;

    // observed order on the 1D sine problem
    let mut logs = Vec::new();
    for m in [17usize, 33, 65] {
        let g = grid1d(1.0, m)?;
        let src = GridFunction::from_fn(g, |x| {
            std::f64::consts::PI.powi(2) * (std::f64::consts::PI * x[0]).sin()
        })?;
        let sol = solve_poisson(&PoissonProblem { source: src })?;
        let mut e = 0.0f64;
        for i in 0..g.node_count() {
            e = e.max((sol.u.values[i] - (std::f64::consts::PI * g.coord(i)[0]).sin()).abs());
        }
        logs.push((g.h.ln(), e.ln()));
    }
    let slope = (logs[0].1 - logs[2].1) / (logs[0].0 - logs[2].0);
    let elapsed = t0.elapsed().as_secs_f64();
    let pass = err1 <= 1e-10 && err2 <= 0.02 && (1.9..=2.1).contains(&slope) && elapsed < 60.0;
    Ok((
        pass,
        format!("1D err {err1:.2e}, disk err {:.2}%, slope {slope:.3}, {elapsed:.1}s", 100.0 * err2),
    ))
}

/// 9. p-Laplace: affine exactness to 1e-8 for p in {1.5, 2, 3, 4}; p = 2
/// bridge to the linear solve to 1e-8; monotone energy descent; analytic
/// gradient vs finite differences to 1e-6 relative.
fn c09_plaplace(_: &Path) -> Result<(bool, String)> {
    let grid = grid1d(1.0, 33)?;
    let mut pass = true;
    let mut affine_err = 0.0f64;
    for p in [1.5, 2.0, 3.0, 4.0] {
        let problem = PLaplaceProblem::new(
            p,
            GridFunction::zeros(grid),
            GridFunction::from_fn(grid, |x| if x[0] < 0.0 { 0.0 } else { 1.0 })?,
            1e-6,
        )?;
        let sol = solve_plaplace(&problem, &SolveOpts::default())?;
        pass &= sol.converged;
        for i in 0..grid.node_count() {
            affine_err = affine_err.max((sol.u.values[i] - (grid.coord(i)[0] + 1.0) / 2.0).abs());
        }
        for w in sol.energy_trace.windows(2) {
            pass &= w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0);
        }
    }
    pass &= affine_err <= 1e-8;

    // p = 2 bridge against the direct linear solve
    let g = grid1d(1.0, 65)?;
    let potential = GridFunction::from_fn(g, |x| 1.0 + 0.5 * x[0] * x[0])?;
    let boundary = GridFunction::from_fn(g, |x| if x[0] < 0.0 { 1.0 } else { 0.5 })?;
    let problem = PLaplaceProblem::new(2.0, potential.clone(), boundary.clone(), 0.0)?;
    let sol = solve_plaplace(&problem, &SolveOpts::default())?;
    let direct = solve_linear_elliptic(&g, Some(&potential), &GridFunction::zeros(g), Some(&boundary))?;
    let mut bridge_err = 0.0f64;
    for i in 0..g.node_count() {
        bridge_err = bridge_err.max((sol.u.values[i] - direct.u.values[i]).abs());
    }
    pass &= sol.converged && bridge_err <= 1e-8;

    // analytic gradient vs central finite differences
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(SEED);
    let gg = grid1d(1.0, 17)?;
    let u = GridFunction::from_values(
        gg,
        (0..gg.node_count()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    )?;
    let pot = GridFunction::from_values(
        gg,
        (0..gg.node_count()).map(|_| rng.gen_range(0.0..2.0)).collect(),
    )?;
    let (p, eps) = (2.7, 1e-3);
    let (_, grad) = plaplace_energy_grad(&u, p, &pot, eps)?;
    let mut fd_err = 0.0f64;
    for _ in 0..12 {
        let k = rng.gen_range(0..gg.node_count());
        let du = 1e-6;
        let mut up = u.clone();
        up.values[k] += du;
        let mut um = u.clone();
        um.values[k] -= du;
        let (ep, _) = plaplace_energy_grad(&up, p, &pot, eps)?;
        let (em, _) = plaplace_energy_grad(&um, p, &pot, eps)?;
        let fd = (ep - em) / (2.0 * du);
        fd_err = fd_err.max((grad[k] - fd).abs() / fd.abs().max(1e-6));
    }
    pass &= fd_err <= 1e-6;
    Ok((
        pass,
        format!("affine err {affine_err:.2e}, bridge err {bridge_err:.2e}, grad-FD err {fd_err:.2e}"),
    ))
}

fn fefferman_constant(m: usize) -> Result<f64> {
    let grid = grid1d(1.0, m)?;
    let v = GridFunction::constant(grid, 1.0)?;
    let phi = PhiSpec::power(-0.25, 2.0, 1.0)?;
    let sweep = ball_sweep(&grid, (m - 1) / 8, &RadiusLadder::doubling(0.125, 1.0)?)?;
    let battery = compact_battery(grid, SEED + 2, 6)?;
    let mut c = 0.0f64;
    for (_, u) in &battery.members {
        let rep = fefferman_check(u, &v, 2.0, &phi, 0.5, &sweep, f64::INFINITY)?;
        c = c.max(rep.constant);
    }
    Ok(c)
}

/// 10. Fefferman: 16/15 and 8/3 to 1e-6 on the analytic 1 - x^2 case,
/// battery constant refinement-stable within 10%, and sigma-split K(sigma)
/// nonincreasing.
fn c10_fefferman(_: &Path) -> Result<(bool, String)> {
    // analytic case at h = 1/2048 (trapezoid weights give O(h^2) here)
    let grid = grid1d(1.0, 4097)?;
    let u = GridFunction::from_fn(grid, |x| 1.0 - x[0] * x[0])?;
    let lhs = {
        // int |u|^2 V with V = 1
        integrate_domain(&u, 2.0)?
    };
    let gmag = gradient_magnitude(&u)?;
    let energy = integrate_domain(&gmag, 2.0)?;
    let lhs_err = (lhs - 16.0 / 15.0).abs();
    let en_err = (energy - 8.0 / 3.0).abs();
    let mut pass = lhs_err <= 1e-6 && en_err <= 1e-6;

    let c_coarse = fefferman_constant(257)?;
    let c_fine = fefferman_constant(513)?;
    let drift = (c_fine - c_coarse).abs() / c_coarse;
    pass &= drift <= 0.10;

    // sigma-split tradeoff curve is nonincreasing
    let g = grid1d(1.0, 513)?;
    let v = GridFunction::from_fn(g, |x| 1.0 + x[0] * x[0])?;
    let battery = compact_battery(g, SEED + 3, 6)?;
    let curve = sigma_split_curve(&battery.members, &v, 2.0, &[0.05, 0.1, 0.2, 0.4, 0.8, 1.6])?;
    let monotone = curve.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12);
    pass &= monotone;
    Ok((
        pass,
        format!(
            "16/15 err {lhs_err:.2e}, 8/3 err {en_err:.2e}, C drift {:.1}%, K monotone {monotone}",
            100.0 * drift
        ),
    ))
}

/// 11. Caccioppoli constant for the 1D cosh solution varies by less than a
/// factor 10 across r in {0.1, 0.2, 0.3}.
fn c11_caccioppoli(_: &Path) -> Result<(bool, String)> {
    let grid = grid1d(1.0, 257)?;
    let problem = PLaplaceProblem::new(
        2.0,
        GridFunction::constant(grid, 1.0)?,
        GridFunction::constant(grid, 1.0)?,
        0.0,
    )?;
    let sol = solve_plaplace(&problem, &SolveOpts::default())?;
    // probe away from x = 0: there u' vanishes and C(r) ~ r^4 by symmetry,
    // so the flat part of the lemma is only visible off the critical point
    let rep = caccioppoli_check(&sol.u, [0.4, 0.0, 0.0], &[0.1, 0.2, 0.3], 2.0, 10.0)?;
    Ok((
        rep.pass,
        format!("C range [{:.4e}, {:.4e}]", rep.lhs, rep.rhs),
    ))
}

/// 12. SUCP: monomial slope matrix within 5%, doubling ratios within 3% of
/// 2^{kp+d}, the exp(-1/x^2) specimen flagged, and V >= 0 battery solutions
/// classified FINITE_ORDER stably under refinement.
fn c12_sucp(_: &Path) -> Result<(bool, String)> {
    let mut pass = true;
    let mut worst_k = 0.0f64;
    let mut worst_ratio = 0.0f64;
    for d in [1usize, 2] {
        let m = if d == 1 { 1025 } else { 513 };
        let grid = UniformGrid::new(Domain::symmetric_box(d, 1.0)?, m)?;
        for k in [0.0f64, 1.0, 2.0] {
            for p in [1.5f64, 2.0, 3.0] {
                let u = GridFunction::from_fn(grid, move |x| {
                    let r = dist(x, &[0.0; 3], d);
                    if k == 0.0 {
                        1.0
                    } else {
                        r.powf(k)
                    }
                })?;
                // slope recovery on the fine ladder
                let profile = mass_function(&u, [0.0; 3], &RadiusLadder::doubling(0.125, 0.5)?, p)?;
                let order = vanishing_order(&profile)?.order;
                let k_err = (order - k).abs() / k.max(1.0);
                worst_k = worst_k.max(k_err);
                pass &= k_err <= 0.05;
                // doubling ratio on an interior ladder
                let interior =
                    mass_function(&u, [0.0; 3], &RadiusLadder::doubling(0.25, 0.5)?, p)?;
                let target = 2.0f64.powf(k * p + d as f64);
                let ratio = interior.ratios[0];
                let r_err = (ratio - target).abs() / target;
                worst_ratio = worst_ratio.max(r_err);
                pass &= r_err <= 0.03;
            }
        }
    }

    // positive control: the infinite-order specimen fires the detector
    let g = grid1d(1.0, 1025)?;
    let specimen = GridFunction::from_fn(g, |x| {
        if x[0] > 0.0 {
            (-1.0 / (x[0] * x[0])).exp()
        } else {
            0.0
        }
    })?;
    let profile = mass_function(&specimen, [0.0; 3], &RadiusLadder::doubling(0.0625, 0.5)?, 2.0)?;
    let label = classify_profile(&profile, DEFAULT_GROWTH_CAP)?;
    pass &= label == Classification::InfiniteOrderSuspect;

    // V >= 0 battery solutions: FINITE_ORDER, stable under one refinement
    let ladder = RadiusLadder::doubling(0.125, 0.5)?;
    let problems: Vec<(f64, fn(&crate::grid::Point) -> f64, fn(&crate::grid::Point) -> f64)> = vec![
        (2.0, |_| 1.0, |_| 1.0),
        (3.0, |x| 1.0 + x[0].abs(), |x| 0.5 + 0.25 * x[0]),
        (2.0, |x| x[0] * x[0], |_| 1.0),
    ];
    let mut stable = true;
    for (p, vf, gf) in problems {
        let mut labels = Vec::new();
        for m in [129usize, 257] {
            let grid = grid1d(1.0, m)?;
            let problem = PLaplaceProblem::new(
                p,
                GridFunction::from_fn(grid, vf)?,
                GridFunction::from_fn(grid, gf)?,
                1e-6,
            )?;
            let rep = sucp_experiment(&problem, [0.0; 3], &ladder, &SolveOpts::default(), 1e3)?;
            labels.push(rep.classification);
        }
        stable &= labels[0] == Classification::FiniteOrder && labels[0] == labels[1];
    }
    pass &= stable;
    Ok((
        pass,
        format!(
            "max k err {:.1}%, max ratio err {:.1}%, specimen {label}, battery stable {stable}",
            100.0 * worst_k,
            100.0 * worst_ratio
        ),
    ))
}

/// 13. Two runs with the same config and seed produce byte-identical outputs
/// (excluding the wall-clock manifest field).
fn c13_determinism(out_dir: &Path) -> Result<(bool, String)> {
    let template = "kind = norm\nseed = 11\n\
                    [domain]\ndim = 1\nnodes = 65\nhalf_width = 1\n\
                    [phi]\nfamily = power\nbeta = -0.25\np = 2\n\
                    [sweep]\nr_min = 0.125\nr_max = 1\n\
                    [function]\nkind = random\n";
    let dirs = [out_dir.join("det_a"), out_dir.join("det_b")];
    for d in &dirs {
        let mut cfg = ExperimentConfig::from_text(template)?;
        cfg.output_dir = d.clone();
        let out = execute_run(&cfg)?;
        if !out.all_pass {
            return Ok((false, "determinism probe run failed its own check".into()));
        }
    }
    let mut names: Vec<String> = std::fs::read_dir(&dirs[0])?
        .map(|e| Ok(e?.file_name().to_string_lossy().into_owned()))
        .collect::<Result<_>>()?;
    names.sort();
    let mut pass = !names.is_empty();
    let mut mismatch = String::new();
    for name in &names {
        let a = std::fs::read_to_string(dirs[0].join(name))?;
        let b = std::fs::read_to_string(dirs[1].join(name))?;
        let strip = |s: &str| -> String {
            s.lines()
                .filter(|l| !l.contains("wall_clock"))
                .collect::<Vec<_>>()
                .join("\n")
        };
        if strip(&a) != strip(&b) {
            pass = false;
            mismatch = name.clone();
        }
    }
    Ok((
        pass,
        if pass {
            format!("{} files byte-identical", names.len())
        } else {
            format!("mismatch in {mismatch}")
        },
    ))
}
