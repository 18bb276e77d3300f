//! Row-parallel loop helpers.
//!
//! With the `parallel` feature these dispatch to rayon; without it they run
//! sequentially. Reductions always sum per-row partials in row order, so the
//! result is bit-identical for any thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Calls `f(j, row)` for every row of a row-major buffer.
pub fn for_each_row<F>(values: &mut [f64], row_len: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    values
        .par_chunks_mut(row_len)
        .enumerate()
        .for_each(|(j, row)| f(j, row));
    #[cfg(not(feature = "parallel"))]
    values
        .chunks_mut(row_len)
        .enumerate()
        .for_each(|(j, row)| f(j, row));
}

/// Evaluates `f(j)` for `j in 0..rows` and sums the results in row order.
pub fn sum_rows<F>(rows: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    let partials: Vec<f64> = (0..rows).into_par_iter().map(f).collect();
    #[cfg(not(feature = "parallel"))]
    let partials: Vec<f64> = (0..rows).map(f).collect();
    partials.iter().fold(0.0, |acc, v| acc + v)
}

/// Maximum of `f(j)` over rows.
pub fn max_rows<F>(rows: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    let partials: Vec<f64> = (0..rows).into_par_iter().map(f).collect();
    #[cfg(not(feature = "parallel"))]
    let partials: Vec<f64> = (0..rows).map(f).collect();
    partials.iter().fold(0.0_f64, |acc, &v| acc.max(v))
}

/// Maps independent jobs, preserving order.
pub fn map_jobs<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    return items.par_iter().map(f).collect();
    #[cfg(not(feature = "parallel"))]
    return items.iter().map(f).collect();
}

/// Whether the crate was built with the rayon backend.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
