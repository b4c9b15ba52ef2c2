//! Dispatch of independent runs.
//!
//! **Parallel execution requires crate feature `"parallel"`** (on by
//! default). Without it every batch runs in a plain loop. Output order is
//! always the index order, so results do not depend on the mode.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Default for Execution {
    #[cfg(feature = "parallel")]
    fn default() -> Self {
        Execution::Parallel
    }

    #[cfg(not(feature = "parallel"))]
    fn default() -> Self {
        Execution::Sequential
    }
}

impl Execution {
    /// Evaluates `f(0) … f(n−1)` and returns the results in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Execution::Sequential => (0..n).map(f).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
        }
    }

    /// Runs `f` with at most `workers` threads for parallel batches.
    /// `None` uses the available parallelism.
    pub fn with_workers<R: Send>(self, workers: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
        match (self, workers) {
            #[cfg(feature = "parallel")]
            (Execution::Parallel, Some(n)) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                Ok(pool) => pool.install(f),
                Err(_) => f(),
            },
            _ => f(),
        }
    }
}
