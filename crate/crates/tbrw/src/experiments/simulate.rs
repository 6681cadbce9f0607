//! Plain runs: one trajectory file per replica plus detected renewals.

use serde::{Deserialize, Serialize};
use tbrw_core::estimators::speed_trajectory;
use tbrw_core::replicas::ReplicaMap;
use tbrw_core::schedule::ConvergingRealization;
use tbrw_core::stopping::{detect_renewals, RenewalRecord};
use tbrw_core::{run_with, InitialTree, LeafSchedule, Retention, Trajectory};

use super::{flatten, guard_for, Ctx};
use crate::error::Result;
use crate::output::{write_csv, write_json};

#[derive(Serialize)]
struct StepRow {
    step: usize,
    position: u32,
    depth: u32,
    xi: u32,
    leaf_at_arrival: bool,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    seed: u64,
    schedule: &'a LeafSchedule,
    horizon: u64,
    initial: &'a InitialTree,
    engine_version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    realization: Option<ConvergingRealization>,
}

pub const RENEWAL_HEADER: [&str; 7] = [
    "replica",
    "k",
    "tau",
    "depth_at_tau",
    "delta_tau",
    "delta_depth",
    "censored",
];

/// One line of `renewals.csv`. Deltas are taken from the previous candidate,
/// or from step 0 for the first.
#[derive(Clone, Debug, Serialize)]
pub struct RenewalRow {
    pub replica: usize,
    pub k: usize,
    pub tau: u64,
    pub depth_at_tau: u32,
    pub delta_tau: u64,
    pub delta_depth: u64,
    pub censored: bool,
}

pub fn renewal_rows(replica: usize, record: &RenewalRecord, initial_depth: u32) -> Vec<RenewalRow> {
    let mut prev = (0u64, initial_depth);
    record
        .taus
        .iter()
        .zip(&record.depths)
        .zip(&record.censored)
        .enumerate()
        .map(|(i, ((&tau, &depth), &censored))| {
            let row = RenewalRow {
                replica,
                k: i + 1,
                tau,
                depth_at_tau: depth,
                delta_tau: tau - prev.0,
                delta_depth: u64::from(depth - prev.1),
                censored,
            };
            prev = (tau, depth);
            row
        })
        .collect()
}

fn write_trajectory(
    dir: &std::path::Path,
    r: usize,
    traj: &Trajectory,
    sidecar: &Sidecar,
) -> Result<()> {
    let rows = (0..=traj.horizon()).map(|n| StepRow {
        step: n,
        position: traj.positions()[n].0,
        depth: traj.depths()[n],
        xi: traj.xi()[n],
        leaf_at_arrival: traj.leaf_at_arrival()[n],
    });
    write_csv(&dir.join(format!("trajectory_{r}.csv")), rows)?;
    write_json(&dir.join(format!("trajectory_{r}.json")), sidecar)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicaSummary {
    pub replica: usize,
    pub seed: u64,
    pub final_depth: u32,
    pub final_nodes: usize,
    pub speed: f64,
    pub speed_stderr: f64,
    pub guard: u64,
    pub renewals_confirmed: usize,
    pub renewals_censored: usize,
    pub first_renewal: Option<u64>,
    pub realization: Option<ConvergingRealization>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulateSummary {
    pub horizon: u64,
    pub schedule: LeafSchedule,
    pub replicas: Vec<ReplicaSummary>,
}

pub fn run(ctx: &mut Ctx) -> Result<(SimulateSummary, Vec<u64>)> {
    let cfg = ctx.cfg;
    let start = ctx.start()?;
    let schedule = cfg.resolved_schedule();
    let seeds = ctx.seeds(cfg.replicas);
    let dir = ctx.sink.dir().to_path_buf();
    let write = cfg.simulate.write_trajectories;
    let results = ctx.exec.map(cfg.replicas, |r| -> Result<_> {
        let seed = seeds[r];
        let traj = run_with(&start, &schedule, cfg.horizon, seed, Retention::Never)?;
        if write {
            let sidecar = Sidecar {
                seed,
                schedule: &schedule,
                horizon: cfg.horizon,
                initial: &cfg.initial,
                engine_version: tbrw_core::ENGINE_VERSION,
                realization: traj.realization,
            };
            write_trajectory(&dir, r, &traj, &sidecar)?;
        }
        let guard = guard_for(cfg, &traj);
        let record = detect_renewals(&traj, guard);
        let speed = speed_trajectory(&traj, cfg.batches);
        let confirmed = record.confirmed_count();
        let summary = ReplicaSummary {
            replica: r,
            seed,
            final_depth: traj.depths()[traj.horizon()],
            final_nodes: traj.final_node_count(),
            speed: speed.value,
            speed_stderr: speed.stderr,
            guard,
            renewals_confirmed: confirmed,
            renewals_censored: record.taus.len() - confirmed,
            first_renewal: record.first(),
            realization: traj.realization,
        };
        Ok((summary, renewal_rows(r, &record, traj.depths()[0])))
    })?;
    let results = flatten(results)?;
    if write {
        for r in 0..cfg.replicas {
            ctx.sink.register(format!("trajectory_{r}.csv"));
            ctx.sink.register(format!("trajectory_{r}.json"));
        }
    }
    let (replicas, rows): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    ctx.sink
        .csv_with_header("renewals.csv", &RENEWAL_HEADER, rows.into_iter().flatten())?;
    ctx.sink
        .csv("replicas.csv", replicas.iter().map(CsvReplica::from))?;
    Ok((
        SimulateSummary {
            horizon: cfg.horizon,
            schedule,
            replicas,
        },
        seeds,
    ))
}

#[derive(Serialize)]
struct CsvReplica {
    replica: usize,
    seed: u64,
    final_depth: u32,
    final_nodes: usize,
    speed: f64,
    speed_stderr: f64,
    renewals_confirmed: usize,
    renewals_censored: usize,
    limit: Option<u32>,
}

impl From<&ReplicaSummary> for CsvReplica {
    fn from(s: &ReplicaSummary) -> Self {
        CsvReplica {
            replica: s.replica,
            seed: s.seed,
            final_depth: s.final_depth,
            final_nodes: s.final_nodes,
            speed: s.speed,
            speed_stderr: s.speed_stderr,
            renewals_confirmed: s.renewals_confirmed,
            renewals_censored: s.renewals_censored,
            limit: s.realization.map(|r| r.limit),
        }
    }
}
