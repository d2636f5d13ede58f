//! Execution strategy for the data-parallel loops (cell batches, oracle scans).
//!
//! With the `parallel` feature (default) `Strategy::Parallel` runs on a
//! dedicated rayon pool; without it every strategy runs sequentially.

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    #[default]
    Sequential,
    Parallel {
        workers: usize,
    },
}

impl Strategy {
    pub fn from_workers(workers: usize) -> Self {
        if workers <= 1 {
            Strategy::Sequential
        } else {
            Strategy::Parallel { workers }
        }
    }
}

pub struct Executor {
    #[cfg(feature = "parallel")]
    pool: Option<rayon::ThreadPool>,
}

impl Executor {
    pub fn new(strategy: Strategy) -> Result<Self> {
        #[cfg(feature = "parallel")]
        {
            let pool = match strategy {
                Strategy::Sequential => None,
                Strategy::Parallel { workers } => Some(
                    rayon::ThreadPoolBuilder::new()
                        .num_threads(workers.max(1))
                        .build()
                        .map_err(|e| crate::error::Error::Pool(e.to_string()))?,
                ),
            };
            Ok(Executor { pool })
        }
        #[cfg(not(feature = "parallel"))]
        {
            let _ = strategy;
            Ok(Executor {})
        }
    }

    /// Maps `f` over `items`, preserving order.
    pub fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            use rayon::prelude::*;
            return pool.install(|| items.par_iter().map(&f).collect());
        }
        items.iter().map(f).collect()
    }
}
