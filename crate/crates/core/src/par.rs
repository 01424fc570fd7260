//! Index-parallel map used by every batch loop in the crate.
//!
//! With the `parallel` feature (default) work is spread over the rayon
//! global pool; without it the same closures run on the calling thread.
//! Results are always returned in index order and every reduction is done
//! sequentially on the collected vector, so parallel and sequential runs are
//! bit-identical.

/// Maps `f` over `0..n`, collecting results in index order.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_indexed_sequential(n, f)
    }
}

/// Sequential counterpart of [`map_indexed`]; always available.
pub fn map_indexed_sequential<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// True when the crate was built with rayon support.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
