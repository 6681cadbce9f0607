//! Seeded random streams.
//!
//! Every replica owns a ChaCha8 stream whose seed is a stable hash of
//! `(master_seed, replica_index, experiment)`, so replicas can run in any order
//! on any number of workers and still reproduce bit for bit.

use rand::{RngCore, SeedableRng};
use sha2::{Digest, Sha256};

/// The random stream used throughout the engine.
pub type Stream = rand_chacha::ChaCha8Rng;

/// Seed for replica `replica` of `experiment` under `master_seed`.
pub fn replica_seed(master_seed: u64, replica: u64, experiment: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(b"tbrw/replica-seed/v1");
    hasher.update(master_seed.to_le_bytes());
    hasher.update(replica.to_le_bytes());
    hasher.update(experiment.as_bytes());
    let digest = hasher.finalize();
    let mut word = [0u8; 8];
    word.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(word)
}

/// Expand a 64-bit seed into a full stream.
pub fn stream(seed: u64) -> Stream {
    Stream::seed_from_u64(seed)
}

/// Split an independent child stream off `parent`.
pub fn split(parent: &mut Stream) -> Stream {
    let mut seed = [0u8; 32];
    parent.fill_bytes(&mut seed);
    Stream::from_seed(seed)
}
