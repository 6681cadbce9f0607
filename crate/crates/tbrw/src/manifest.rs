//! `manifest.json`: everything needed to rerun an experiment bit for bit.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tbrw_core::LeafSchedule;

use crate::config::ExperimentConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: String,
    /// SHA-256 of the resolved config without `out` and `workers`.
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub schedule: LeafSchedule,
    pub engine_version: String,
    pub workers: usize,
    /// Seed of every replica, in replica order.
    pub replica_seeds: Vec<u64>,
    pub wall_time_ms: u64,
    pub outputs: Vec<String>,
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let mut canonical = cfg.clone();
    canonical.out = None;
    canonical.workers = None;
    let bytes = serde_json::to_vec(&canonical).expect("config serializes");
    Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
