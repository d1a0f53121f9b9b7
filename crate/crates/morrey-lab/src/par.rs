//! Thin switch between rayon data-parallel loops and a sequential fallback.
//!
//! All hot loops in the crate go through [`map_indexed`]. With the default
//! `parallel` feature the map runs on the rayon pool; without it the same
//! closure runs sequentially. Either way the output vector is in index order,
//! so reductions done afterwards are bit-reproducible run to run.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `0..n`, collecting results in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Sequential fallback used when the `parallel` feature is disabled.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Always-sequential variant, kept for benchmarking against the parallel path.
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// True when this build dispatches through rayon.
pub fn parallel_enabled() -> bool {
    cfg!(feature = "parallel")
}
