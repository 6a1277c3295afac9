//! Replica fan-out.
//!
//! Every replica is a pure function of its index, and results come back in
//! index order, so the reductions downstream see the same sequence whichever
//! path ran.

use crate::error::Result;

/// Runs `f(0), …, f(count - 1)`, in parallel when the `parallel` feature is on.
pub fn map_replicas<T, F>(count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        map_parallel(count, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_sequential(count, f)
    }
}

pub fn map_sequential<T, F>(count: usize, f: F) -> Result<Vec<T>>
where
    F: Fn(usize) -> Result<T>,
{
    (0..count).map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn map_parallel<T, F>(count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    use rayon::prelude::*;
    (0..count).into_par_iter().map(f).collect()
}
