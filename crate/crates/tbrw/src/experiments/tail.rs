//! Survival of `τ₁`. A replica without a confirmed renewal contributes
//! `τ₁ > N - guard`, the last step whose candidacy could have been confirmed.

use serde::{Deserialize, Serialize};
use tbrw_core::estimators::{tail_survival, StretchedExpFit, TauSample};
use tbrw_core::replicas::ReplicaMap;
use tbrw_core::stopping::detect_renewals;
use tbrw_core::{run_with, Retention};

use super::{flatten, guard_for, Ctx};
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailSummary {
    pub replicas: usize,
    pub horizon: u64,
    pub observed: usize,
    pub censored: usize,
    pub fit: Option<StretchedExpFit>,
}

#[derive(Serialize)]
struct SurvivalRow {
    t: u64,
    survival: f64,
}

#[derive(Serialize)]
struct SampleRow {
    replica: usize,
    tau1: Option<u64>,
    censored_after: Option<u64>,
}

pub fn run(ctx: &mut Ctx) -> Result<(TailSummary, Vec<u64>)> {
    let cfg = ctx.cfg;
    let start = ctx.start()?;
    let schedule = cfg.resolved_schedule();
    let seeds = ctx.seeds(cfg.replicas);
    let results = ctx.exec.map(cfg.replicas, |r| -> Result<TauSample> {
        let traj = run_with(&start, &schedule, cfg.horizon, seeds[r], Retention::Never)?;
        let guard = guard_for(cfg, &traj);
        Ok(match detect_renewals(&traj, guard).first() {
            Some(t) => TauSample::Observed(t),
            None => TauSample::Censored(cfg.horizon.saturating_sub(guard)),
        })
    })?;
    let samples = flatten(results)?;
    let fit = tail_survival(&samples)?;
    let observed = samples
        .iter()
        .filter(|s| matches!(s, TauSample::Observed(_)))
        .count();
    ctx.sink.csv(
        "tail.csv",
        fit.survival
            .iter()
            .map(|&(t, survival)| SurvivalRow { t, survival }),
    )?;
    ctx.sink.csv(
        "tau1.csv",
        samples.iter().enumerate().map(|(replica, s)| match *s {
            TauSample::Observed(t) => SampleRow {
                replica,
                tau1: Some(t),
                censored_after: None,
            },
            TauSample::Censored(t) => SampleRow {
                replica,
                tau1: None,
                censored_after: Some(t),
            },
        }),
    )?;
    let summary = TailSummary {
        replicas: cfg.replicas,
        horizon: cfg.horizon,
        observed,
        censored: samples.len() - observed,
        fit: fit.fit,
    };
    Ok((summary, seeds))
}
