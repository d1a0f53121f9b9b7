//! Numerical laboratory for generalized Morrey spaces and the inequalities
//! they control: ball-supremum norms, the Hardy-Littlewood maximal operator
//! and Riesz potentials, Fefferman-type embeddings, a p-Laplace solver, and
//! vanishing-order / doubling-index analysis of its solutions.
//!
//! Everything is computed on uniform grids in 1-3 dimensions. Suprema over
//! balls and radii are discretized over explicit finite sweeps; inequality
//! "certificates" are empirical constants over seeded function batteries,
//! never proofs. Reports carry the witness (ball, node, or battery member)
//! attaining each extremal value, the sweep description, and the seed.
//!
//! The `parallel` feature (on by default) runs the data-parallel kernels on
//! rayon; disabling it falls back to sequential loops with bit-identical
//! results.

pub mod battery;
pub mod config;
pub mod error;
pub mod grid;
pub mod norms;
pub mod operators;
pub mod par;
pub mod pde;
pub mod phi;
pub mod report;
pub mod runner;
pub mod sucp;
pub mod suite;

pub use error::{MorreyError, Result};
