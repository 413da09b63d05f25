//! Sequential or data-parallel execution of the hot loops.
//!
//! With the `parallel` feature (on by default) [`Exec::Parallel`] runs on the
//! global rayon pool. Without it, `Parallel` silently falls back to the
//! sequential path, so callers never need their own `cfg`.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    /// Whether work actually fans out across threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// Order-preserving map over a slice.
    pub fn map<T, U, F>(self, items: &[T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Order-preserving map over `0..len`.
    pub fn map_range<U, F>(self, len: usize, f: F) -> Vec<U>
    where
        U: Send,
        F: Fn(usize) -> U + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..len).into_par_iter().map(f).collect();
        }
        (0..len).map(f).collect()
    }

    /// Fold each partition with `fold_op`, then combine partials with
    /// `reduce_op`. `reduce_op` must be associative for the parallel path
    /// to agree with the sequential one.
    pub fn fold<T, R, ID, F, RD>(self, items: &[T], identity: ID, fold_op: F, reduce_op: RD) -> R
    where
        T: Sync,
        R: Send,
        ID: Fn() -> R + Sync + Send,
        F: Fn(R, &T) -> R + Sync + Send,
        RD: Fn(R, R) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return items
                .par_iter()
                .fold(&identity, &fold_op)
                .reduce(&identity, &reduce_op);
        }
        let _ = &reduce_op;
        items.iter().fold(identity(), fold_op)
    }
}
