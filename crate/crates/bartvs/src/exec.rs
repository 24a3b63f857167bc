use bartvs_core::Executor;
use rayon::prelude::*;

use crate::error::{CliError, CliResult};

/// Runs tasks on a dedicated rayon pool. Results come back in index order,
/// so the worker count never changes any output.
pub struct RayonExecutor {
    pool: rayon::ThreadPool,
}

impl RayonExecutor {
    /// `workers == 0` uses one thread per available core.
    pub fn new(workers: usize) -> CliResult<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| CliError::Runtime(format!("cannot start worker pool: {e}")))?;
        Ok(Self { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for RayonExecutor {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..n).into_par_iter().map(f).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use bartvs_core::Sequential;

    #[test]
    fn order_matches_sequential() {
        let ex = RayonExecutor::new(3).unwrap();
        assert_eq!(ex.workers(), 3);
        let f = |i: usize| i * i + 1;
        assert_eq!(ex.map(100, f), Sequential.map(100, f));
        let nested = ex.map(4, |i| ex.map(3, |j| i * 10 + j));
        assert_eq!(nested[3], vec![30, 31, 32]);
    }
}
