//! Order-preserving map over an index range: rayon when the `parallel`
//! feature is on, a plain iterator otherwise. Results always come back in
//! index order, so reductions over them are reproducible either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..len).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(len: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..len).map(f).collect()
}

/// Sequential variant regardless of features; used by benches and by
/// callers that ask for sequential execution explicitly.
pub fn map_indexed_seq<T, F>(len: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..len).map(f).collect()
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
