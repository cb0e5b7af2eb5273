//! Execution strategy for embarrassingly parallel loops.
//!
//! Every parallel loop in the crate is written as "compute item `i` for
//! `i in 0..n`, then reduce the returned vector in index order". Items only
//! depend on their index (and on per-index random substreams), so any
//! executor yields bit-identical results.

use alloc::vec::Vec;

/// Evaluates `f(0), ..., f(n-1)` and returns the results in index order.
pub trait Executor: Sync {
    fn map_indexed<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Single-threaded executor.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map_indexed<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}

impl<E: Executor + ?Sized> Executor for &E {
    fn map_indexed<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (**self).map_indexed(n, f)
    }
}
