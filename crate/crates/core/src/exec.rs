//! Replica scheduling.
//!
//! Simulations describe their work as a pure function of the replica id;
//! an executor decides where it runs. Results always come back ordered by
//! replica id, so aggregated output never depends on scheduling.

use alloc::vec::Vec;

pub trait ReplicaExecutor {
    /// Evaluates `f(0), …, f(count - 1)` and returns the results in order.
    fn map<T, F>(&self, count: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send;
}

/// Runs replicas one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl ReplicaExecutor for Sequential {
    fn map<T, F>(&self, count: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        (0..count).map(f).collect()
    }
}
