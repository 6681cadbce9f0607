//! Experiment runner: JSON configs, a rayon replica executor, CSV/JSON outputs
//! and a manifest per run.

pub mod config;
pub mod error;
pub mod executor;
pub mod experiments;
pub mod manifest;
pub mod output;

use std::time::Instant;

pub use config::{Experiment, ExperimentConfig, Overrides};
pub use error::{Result, RunError};
pub use executor::Parallel;
pub use manifest::Manifest;

/// Result of one experiment run.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub manifest: Manifest,
    /// The experiment's summary, as written to `summary.json`.
    pub summary: serde_json::Value,
}

impl Outcome {
    /// Decode the summary into the experiment's summary type.
    pub fn summary_as<T: serde::de::DeserializeOwned>(&self) -> Result<T> {
        Ok(serde_json::from_value(self.summary.clone())?)
    }
}

/// Run `cfg` and write its outputs, `summary.json` and `manifest.json` to its out directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.validate()?;
    let started = Instant::now();
    let exec = Parallel::new(cfg.workers);
    let mut sink = output::Sink::create(cfg.out_dir())?;
    let report = experiments::dispatch(cfg, &exec, &mut sink)?;
    sink.json("summary.json", &report.summary)?;
    let mut outputs = sink.files().to_vec();
    outputs.push("manifest.json".to_owned());
    let manifest = Manifest {
        experiment: cfg.experiment.name().to_owned(),
        config_hash: manifest::config_hash(cfg),
        config: cfg.clone(),
        schedule: cfg.resolved_schedule(),
        engine_version: tbrw_core::ENGINE_VERSION.to_owned(),
        workers: exec.workers(),
        replica_seeds: report.seeds,
        wall_time_ms: started.elapsed().as_millis() as u64,
        outputs,
    };
    sink.json("manifest.json", &manifest)?;
    Ok(Outcome {
        manifest,
        summary: report.summary,
    })
}
