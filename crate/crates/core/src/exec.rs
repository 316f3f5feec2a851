//! Execution policy for the data-parallel loops (path enumeration, shot
//! blocks, POVM element construction, figure grids).
//!
//! With the `parallel` feature the loops run on the rayon global pool.
//! Without it, or with [`Execution::Sequential`], they run on the calling
//! thread. Results are always collected in index order, so both policies
//! produce identical output.

/// How data-parallel loops are executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Uses rayon when the `parallel` feature is enabled, otherwise falls
    /// back to sequential execution.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// True when this policy actually runs on more than one thread.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Evaluates `f(0..n)` and returns the results in index order.
    pub fn map_indexed<R, F>(self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Maps every index and folds the results with `combine`. `combine` must
    /// be associative and commutative for the result to be independent of
    /// the policy (integer count merges are).
    pub fn map_reduce_indexed<R, F, G>(self, n: usize, identity: R, f: F, combine: G) -> R
    where
        R: Send + Sync + Clone,
        F: Fn(usize) -> R + Sync + Send,
        G: Fn(R, R) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            use rayon::prelude::*;
            return (0..n)
                .into_par_iter()
                .map(f)
                .reduce(|| identity.clone(), &combine);
        }
        (0..n).map(f).fold(identity, combine)
    }

    /// Fallible variant of [`Execution::map_indexed`]; the first error in
    /// index order is returned.
    pub fn try_map_indexed<R, E, F>(self, n: usize, f: F) -> Result<Vec<R>, E>
    where
        R: Send,
        E: Send,
        F: Fn(usize) -> Result<R, E> + Sync + Send,
    {
        self.map_indexed(n, f).into_iter().collect()
    }
}
