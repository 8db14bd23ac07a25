//! Replicate execution on a rayon pool.

use genfeller_core::Replicates;
use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

/// Runs replicates on a dedicated pool; output order is the replicate
/// order regardless of scheduling.
pub struct Parallel {
    pool: ThreadPool,
}

impl Parallel {
    /// `threads = None` uses one thread per available core.
    pub fn new(threads: Option<usize>) -> Self {
        let mut b = ThreadPoolBuilder::new();
        if let Some(n) = threads {
            b = b.num_threads(n.max(1));
        }
        Parallel { pool: b.build().expect("thread pool") }
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Default for Parallel {
    fn default() -> Self {
        Parallel::new(None)
    }
}

impl Replicates for Parallel {
    fn map<T, F>(&self, count: usize, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..count).into_par_iter().map(job).collect())
    }
}
