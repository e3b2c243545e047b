use rayon::prelude::*;

use covset_core::exec::ReplicaExecutor;

/// Replica executor backed by a dedicated rayon pool.
pub struct RayonPool {
    pool: rayon::ThreadPool,
}

impl RayonPool {
    /// `threads = 0` lets rayon pick the number of threads.
    pub fn new(threads: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
        Ok(Self { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl ReplicaExecutor for RayonPool {
    fn map<T, F>(&self, count: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        // Indexed collect keeps replica order whatever the scheduling.
        self.pool.install(|| (0..count).into_par_iter().map(f).collect())
    }
}
