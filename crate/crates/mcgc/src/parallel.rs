//! Execution helpers for data-parallel inner loops.
//!
//! Every parallel map here preserves index order, so reductions over the
//! returned vectors are bitwise identical to a sequential run.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Whether the crate was compiled with the `parallel` feature.
pub fn default_parallel() -> bool {
    cfg!(feature = "parallel")
}

/// Maps `f` over `0..n`, in parallel when requested and available.
pub fn map_indexed<T, F>(n: usize, parallel: bool, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = parallel;
    (0..n).map(f).collect()
}
