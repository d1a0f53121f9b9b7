//! Seeded batteries of test functions for inequality certification.
//!
//! Four families, cycled: indicators of balls, Gaussians, radial monomials
//! |x|^k, and seeded pseudo-random smooth fields (a sum of 5 random-frequency
//! cosines). The seed is recorded in every report that consumed the battery.

use crate::error::Result;
use crate::grid::{dist, GridFunction, Point, UniformGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Battery {
    pub members: Vec<(String, GridFunction)>,
    pub seed: u64,
}

impl Battery {
    pub fn functions(&self) -> impl Iterator<Item = &GridFunction> {
        self.members.iter().map(|(_, f)| f)
    }
}

/// Builds `count` battery members on `grid`, deterministically from `seed`.
pub fn standard_battery(grid: UniformGrid, seed: u64, count: usize) -> Result<Battery> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = grid.dim();
    let half = grid.domain.extent() / 2.0;
    let mut members = Vec::with_capacity(count);
    for idx in 0..count {
        let (label, f) = match idx % 4 {
            0 => {
                let r = rng.gen_range(0.15 * half..0.8 * half);
                let c = random_point(&mut rng, dim, 0.3 * half);
                let f = GridFunction::from_fn(grid, |x| {
                    if dist(x, &c, dim) < r {
                        1.0
                    } else {
                        0.0
                    }
                })?;
                (format!("indicator_{idx}"), f)
            }
            1 => {
                let w = rng.gen_range(0.1 * half..0.5 * half);
                let c = random_point(&mut rng, dim, 0.3 * half);
                let f = GridFunction::from_fn(grid, |x| {
                    let d = dist(x, &c, dim);
                    (-d * d / (w * w)).exp()
                })?;
                (format!("gaussian_{idx}"), f)
            }
            2 => {
                let k = (idx / 4 % 4) as f64;
                let f = GridFunction::from_fn(grid, |x| dist(x, &[0.0; 3], dim).powf(k))?;
                (format!("monomial_{idx}"), f)
            }
            _ => {
                let mut amps = [0.0f64; 5];
                let mut freqs = [[0.0f64; 3]; 5];
                let mut phases = [0.0f64; 5];
                for j in 0..5 {
                    amps[j] = rng.gen_range(-1.0..1.0);
                    phases[j] = rng.gen_range(0.0..std::f64::consts::TAU);
                    for a in 0..dim {
                        freqs[j][a] = rng.gen_range(-4.0..4.0);
                    }
                }
                let f = GridFunction::from_fn(grid, |x| {
                    let mut s = 0.0;
                    for j in 0..5 {
                        let mut arg = phases[j];
                        for a in 0..dim {
                            arg += freqs[j][a] * x[a];
                        }
                        s += amps[j] * arg.cos();
                    }
                    s
                })?;
                (format!("cosine_field_{idx}"), f)
            }
        };
        members.push((label, f));
    }
    Ok(Battery { members, seed })
}

/// Compactly supported smooth bumps (vanishing near the boundary), for
/// certifiers whose hypotheses require compact support.
pub fn compact_battery(grid: UniformGrid, seed: u64, count: usize) -> Result<Battery> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = grid.dim();
    let half = grid.domain.extent() / 2.0;
    let mut members = Vec::with_capacity(count);
    for idx in 0..count {
        let w = rng.gen_range(0.15 * half..0.4 * half);
        let c = random_point(&mut rng, dim, 0.25 * half);
        let amp = rng.gen_range(0.5..2.0);
        let support = rng.gen_range(0.5 * half..0.85 * half);
        // amp * exp(-d^2/w^2) * smooth cutoff to zero at radius `support`
        let f = GridFunction::from_fn(grid, |x| {
            let d = dist(x, &c, dim);
            if d >= support {
                return 0.0;
            }
            let t = d / support;
            let cutoff = (1.0 - t * t).powi(2);
            amp * (-d * d / (w * w)).exp() * cutoff
        })?;
        members.push((format!("bump_{idx}"), f));
    }
    Ok(Battery { members, seed })
}

fn random_point(rng: &mut ChaCha8Rng, dim: usize, spread: f64) -> Point {
    let mut p = [0.0; 3];
    for a in 0..dim {
        p[a] = rng.gen_range(-spread..spread);
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Domain;

    #[test]
    fn battery_is_deterministic_per_seed() {
        let grid = UniformGrid::new(Domain::symmetric_box(1, 1.0).unwrap(), 33).unwrap();
        let a = standard_battery(grid, 42, 8).unwrap();
        let b = standard_battery(grid, 42, 8).unwrap();
        for (x, y) in a.members.iter().zip(&b.members) {
            assert_eq!(x.0, y.0);
            assert_eq!(x.1.values, y.1.values);
        }
        let c = standard_battery(grid, 43, 8).unwrap();
        assert_ne!(a.members[0].1.values, c.members[0].1.values);
    }

    #[test]
    fn compact_battery_vanishes_at_boundary() {
        let grid = UniformGrid::new(Domain::symmetric_box(2, 1.0).unwrap(), 17).unwrap();
        let b = compact_battery(grid, 1, 4).unwrap();
        for f in b.functions() {
            // corner nodes are outside every support radius
            assert_eq!(f.values[0], 0.0);
            assert_eq!(*f.values.last().unwrap(), 0.0);
        }
    }
}
