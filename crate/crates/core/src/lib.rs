//! Core of the tree builder random walk laboratory: the process engine, leaf
//! schedules, exact stopping-time detectors, block estimators and couplings.

#![cfg_attr(not(test), no_std)]
extern crate alloc;

pub mod counterexample;
pub mod coupling;
pub mod engine;
pub mod error;
pub mod estimators;
pub mod replicas;
pub mod rng;
pub mod schedule;
pub mod stats;
pub mod stopping;
pub mod tree;

pub use engine::{make_initial, run, run_with, InitialTree, Retention, SimState, Trajectory};
pub use error::{Error, Result};
pub use schedule::{LeafLaw, LeafSchedule};
pub use tree::{NodeId, RootedTree};

/// Version string recorded in run manifests.
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");
