//! Data-parallel helpers with a sequential fallback.
//!
//! Results are identical bit for bit with the `parallel` feature on or off:
//! callers that reduce must fold fixed-size chunk partials in index order,
//! and `map_indexed` preserves element order either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `0..n`, preserving order.
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}
