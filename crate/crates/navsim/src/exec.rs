//! Rayon-backed [`Executor`].

use navsim_core::exec::Executor;
use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuildError, ThreadPoolBuilder};

/// Runs work items on a dedicated rayon pool. Results keep input order.
pub struct Parallel {
    pool: ThreadPool,
}

impl Parallel {
    /// `None` uses one thread per logical core.
    pub fn new(threads: Option<usize>) -> Result<Self, ThreadPoolBuildError> {
        let mut b = ThreadPoolBuilder::new();
        if let Some(n) = threads {
            b = b.num_threads(n);
        }
        Ok(Self { pool: b.build()? })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for Parallel {
    fn map<T: Sync, R: Send>(&self, items: &[T], f: &(dyn Fn(&T) -> R + Sync)) -> Vec<R> {
        self.pool.install(|| items.par_iter().map(f).collect())
    }

    fn map_mut<T: Send, R: Send>(&self, items: &mut [T], f: &(dyn Fn(&mut T) -> R + Sync)) -> Vec<R> {
        self.pool.install(|| items.par_iter_mut().map(f).collect())
    }
}
