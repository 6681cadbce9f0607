//! Replica fan-out on a rayon pool, with per-replica panic isolation.

use std::panic::{catch_unwind, AssertUnwindSafe};

use rayon::prelude::*;
use tbrw_core::replicas::ReplicaMap;

pub struct Parallel {
    pool: rayon::ThreadPool,
}

impl Parallel {
    /// `workers = None` uses rayon's default (one per core).
    pub fn new(workers: Option<usize>) -> Self {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(w) = workers {
            builder = builder.num_threads(w);
        }
        Parallel {
            pool: builder.build().expect("thread pool"),
        }
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }
}

fn panic_message(payload: &(dyn std::any::Any + Send)) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_owned()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "panic".to_owned()
    }
}

impl ReplicaMap for Parallel {
    fn map<T, F>(&self, count: usize, f: F) -> tbrw_core::Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        let results: Vec<std::thread::Result<T>> = self.pool.install(|| {
            (0..count)
                .into_par_iter()
                .map(|i| catch_unwind(AssertUnwindSafe(|| f(i))))
                .collect()
        });
        let mut out = Vec::with_capacity(count);
        let mut failed: Vec<(usize, String)> = Vec::new();
        for (i, r) in results.into_iter().enumerate() {
            match r {
                Ok(v) => out.push(v),
                Err(payload) => failed.push((i, panic_message(payload.as_ref()))),
            }
        }
        match failed.first() {
            None => Ok(out),
            Some((index, message)) => {
                let others = failed.len() - 1;
                let message = if others == 0 {
                    message.clone()
                } else {
                    format!("{message} (and {others} more replicas)")
                };
                Err(tbrw_core::Error::ReplicaFailed {
                    index: *index,
                    message,
                })
            }
        }
    }
}
