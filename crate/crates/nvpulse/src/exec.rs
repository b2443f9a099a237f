//! Sweep-cell execution: data-parallel by default, sequential on demand.
//!
//! Sweep cells (τ, M, multiplier, grid offsets, quadrature nodes, …) are
//! independent pure computations, so they map cleanly onto rayon. Results
//! come back in input order regardless of scheduling, which keeps output
//! files byte-identical between parallel and sequential builds. The
//! `parallel` feature (on by default) selects the rayon path; the `_seq`
//! variant is always available so benchmarks can compare both in one build.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `items`, preserving order. Parallel when the `parallel`
/// feature is enabled, sequential otherwise.
#[cfg(feature = "parallel")]
pub fn map_cells<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_cells<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.iter().map(f).collect()
}

/// Sequential reference implementation of [`map_cells`].
pub fn map_cells_seq<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.iter().map(f).collect()
}
