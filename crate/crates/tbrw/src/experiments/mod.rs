//! The eleven experiments. Each returns a typed summary plus the seed of every
//! replica it ran; files go through the [`Sink`].

pub mod clt;
pub mod counterexample;
pub mod degree;
pub mod grand;
pub mod lil;
pub mod monotone;
pub mod renewal;
pub mod simulate;
pub mod speed;
pub mod tail;
pub mod tv;

use serde::{Deserialize, Serialize};
use tbrw_core::rng::replica_seed;
use tbrw_core::stopping::default_guard;
use tbrw_core::{make_initial, SimState, Trajectory};

use crate::config::{Experiment, ExperimentConfig};
use crate::error::{Result, RunError};
use crate::executor::Parallel;
use crate::output::Sink;

pub struct Report {
    pub summary: serde_json::Value,
    pub seeds: Vec<u64>,
}

pub struct Ctx<'a> {
    pub cfg: &'a ExperimentConfig,
    pub exec: &'a Parallel,
    pub sink: &'a mut Sink,
}

impl Ctx<'_> {
    pub fn seeds(&self, count: usize) -> Vec<u64> {
        seeds(self.cfg.master_seed, count, self.cfg.experiment.name())
    }

    pub fn start(&self) -> Result<SimState> {
        Ok(make_initial(&self.cfg.initial)?)
    }
}

/// Configured guard, else the trajectory's default.
pub fn guard_for(cfg: &ExperimentConfig, traj: &Trajectory) -> u64 {
    cfg.guard.unwrap_or_else(|| default_guard(traj))
}

pub fn seeds(master: u64, count: usize, tag: &str) -> Vec<u64> {
    (0..count)
        .map(|r| replica_seed(master, r as u64, tag))
        .collect()
}

/// Unwrap per-replica results, naming the first replica that failed.
pub fn flatten<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    results
        .into_iter()
        .enumerate()
        .map(|(index, r)| {
            r.map_err(|e| match e {
                RunError::Core(e @ tbrw_core::Error::ReplicaFailed { .. }) => RunError::Core(e),
                RunError::Core(e) => RunError::Core(tbrw_core::Error::ReplicaFailed {
                    index,
                    message: e.to_string(),
                }),
                other => other,
            })
        })
        .collect()
}

/// Mean and standard error of a per-replica quantity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

impl MeanSe {
    pub fn of(xs: &[f64]) -> Self {
        let stderr = if xs.len() > 1 {
            tbrw_core::stats::std_error(xs)
        } else {
            0.0
        };
        MeanSe {
            mean: tbrw_core::stats::mean(xs),
            stderr,
            count: xs.len(),
        }
    }
}

pub fn dispatch(cfg: &ExperimentConfig, exec: &Parallel, sink: &mut Sink) -> Result<Report> {
    let mut ctx = Ctx { cfg, exec, sink };
    fn pack<S: Serialize>((summary, seeds): (S, Vec<u64>)) -> Result<Report> {
        Ok(Report {
            summary: serde_json::to_value(summary)?,
            seeds,
        })
    }
    match cfg.experiment {
        Experiment::Simulate => pack(simulate::run(&mut ctx)?),
        Experiment::RenewalStats => pack(renewal::run(&mut ctx)?),
        Experiment::SpeedCurve => pack(speed::run(&mut ctx)?),
        Experiment::DegreeDist => pack(degree::run(&mut ctx)?),
        Experiment::Tail => pack(tail::run(&mut ctx)?),
        Experiment::Clt => pack(clt::run(&mut ctx)?),
        Experiment::Lil => pack(lil::run(&mut ctx)?),
        Experiment::CouplingGrand => pack(grand::run(&mut ctx)?),
        Experiment::CouplingTv => pack(tv::run(&mut ctx)?),
        Experiment::CouplingMonotone => pack(monotone::run(&mut ctx)?),
        Experiment::Counterexample => pack(counterexample::run(&mut ctx)?),
    }
}
