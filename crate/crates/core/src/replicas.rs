//! Replica fan-out. The core only ships a sequential executor; parallel ones live
//! with the IO layer.

use alloc::vec::Vec;

use crate::error::Result;

/// Evaluate `f(0), ..., f(count - 1)` and return the results in index order.
pub trait ReplicaMap {
    fn map<T, F>(&self, count: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Sequential;

impl ReplicaMap for Sequential {
    fn map<T, F>(&self, count: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        Ok((0..count).map(f).collect())
    }
}
