//! Standardized `D_N` against N(0, 1). `v̂` is the pooled renewal ratio and
//! `σ̂` the block variance candidate selected on the same sample.

use serde::{Deserialize, Serialize};
use tbrw_core::estimators::{
    clt_samples, select_sigma, speed_renewal, variance_estimators, SigmaChoice, VariancePair,
};
use tbrw_core::replicas::ReplicaMap;
use tbrw_core::stats;
use tbrw_core::stopping::{detect_renewals, Block};
use tbrw_core::{run_with, Retention, Trajectory};

use super::{flatten, guard_for, Ctx};
use crate::config::ExperimentConfig;
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub v_hat: f64,
    pub variance: VariancePair,
    pub sigma: SigmaChoice,
}

/// Blocks of one trajectory, honoring `renewal_stats.drop_first`.
pub(super) fn blocks_of(cfg: &ExperimentConfig, traj: &Trajectory) -> Vec<Block> {
    let mut blocks = detect_renewals(traj, guard_for(cfg, traj)).blocks();
    if cfg.renewal_stats.drop_first && !blocks.is_empty() {
        blocks.remove(0);
    }
    blocks
}

pub(super) fn normalize(blocks: &[Block], d_n: &[f64], n: u64) -> Result<Normalization> {
    let v_hat = speed_renewal(blocks)?.value;
    let variance = variance_estimators(blocks, v_hat)?;
    let sigma = select_sigma(&variance, d_n, n, v_hat)?;
    Ok(Normalization {
        v_hat,
        variance,
        sigma,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CltSummary {
    pub replicas: usize,
    pub horizon: u64,
    pub normalization: Normalization,
    pub ks_stat: f64,
    pub ks_pvalue: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Serialize)]
struct Row {
    replica: usize,
    #[serde(rename = "D_N")]
    d_n: f64,
    standardized: f64,
}

pub fn run(ctx: &mut Ctx) -> Result<(CltSummary, Vec<u64>)> {
    let cfg = ctx.cfg;
    let start = ctx.start()?;
    let schedule = cfg.resolved_schedule();
    let seeds = ctx.seeds(cfg.replicas);
    let results = ctx
        .exec
        .map(cfg.replicas, |r| -> Result<(f64, Vec<Block>)> {
            let traj = run_with(&start, &schedule, cfg.horizon, seeds[r], Retention::Never)?;
            Ok((
                f64::from(traj.depths()[traj.horizon()]),
                blocks_of(cfg, &traj),
            ))
        })?;
    let (d_n, blocks): (Vec<f64>, Vec<Vec<Block>>) = flatten(results)?.into_iter().unzip();
    let pooled: Vec<Block> = blocks.into_iter().flatten().collect();
    let normalization = normalize(&pooled, &d_n, cfg.horizon)?;
    let sample = clt_samples(
        &d_n,
        cfg.horizon,
        normalization.v_hat,
        normalization.sigma.sigma,
    )?;
    ctx.sink.csv(
        "clt.csv",
        d_n.iter()
            .zip(&sample.standardized)
            .enumerate()
            .map(|(replica, (d, z))| Row {
                replica,
                d_n: *d,
                standardized: *z,
            }),
    )?;
    let threshold = cfg.clt.ks_threshold;
    let summary = CltSummary {
        replicas: cfg.replicas,
        horizon: cfg.horizon,
        normalization,
        ks_stat: sample.ks_stat,
        ks_pvalue: stats::ks_one_sample_pvalue(sample.ks_stat, d_n.len()),
        threshold,
        pass: sample.ks_stat < threshold,
    };
    Ok((summary, seeds))
}
