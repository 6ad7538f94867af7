//! Order-preserving map over independent work items.
//!
//! With the `parallel` feature (default) the work runs on the rayon global
//! pool; without it the same API degrades to a plain sequential map. Output
//! order always matches input order, so results are identical either way —
//! worker count affects wall time only.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `items`, preserving order.
#[cfg(feature = "parallel")]
pub fn par_map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    items.into_par_iter().map(f).collect()
}

/// Map `f` over `items`, preserving order (sequential fallback).
#[cfg(not(feature = "parallel"))]
pub fn par_map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}

/// Always-sequential map; the baseline the benchmarks compare against.
pub fn seq_map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}

/// Cap the worker pool at `n` threads (0 leaves the default). Returns the
/// number of workers actually in use; 1 when built without `parallel`.
pub fn init_workers(n: usize) -> usize {
    #[cfg(feature = "parallel")]
    {
        if n > 0 {
            // Ignore the error: the global pool can only be built once, which
            // is fine for repeated calls in one process.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = n;
        1
    }
}
