//! Degree histogram of the final tree against `4 / (d (d+1) (d+2))`.

use serde::{Deserialize, Serialize};
use tbrw_core::estimators::{degree_histogram, DegreeHistogram};
use tbrw_core::replicas::ReplicaMap;
use tbrw_core::{run_with, Retention};

use super::{flatten, Ctx};
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeSummary {
    pub replicas: usize,
    pub horizon: u64,
    /// Histogram pooled over replicas.
    pub histogram: DegreeHistogram,
}

#[derive(Serialize)]
struct Row {
    d: usize,
    empirical: f64,
    target: f64,
    deviation: f64,
}

pub fn run(ctx: &mut Ctx) -> Result<(DegreeSummary, Vec<u64>)> {
    let cfg = ctx.cfg;
    let start = ctx.start()?;
    let schedule = cfg.resolved_schedule();
    let seeds = ctx.seeds(cfg.replicas);
    let results = ctx.exec.map(cfg.replicas, |r| -> Result<DegreeHistogram> {
        let traj = run_with(&start, &schedule, cfg.horizon, seeds[r], Retention::Always)?;
        Ok(degree_histogram(traj.final_tree().expect("retained")))
    })?;
    let histogram = DegreeHistogram::merge(&flatten(results)?);
    ctx.sink.csv(
        "degree.csv",
        histogram.rows.iter().map(|r| Row {
            d: r.d,
            empirical: r.empirical,
            target: r.target,
            deviation: r.deviation,
        }),
    )?;
    Ok((
        DegreeSummary {
            replicas: cfg.replicas,
            horizon: cfg.horizon,
            histogram,
        },
        seeds,
    ))
}
