//! Renewal blocks: the two speed estimators side by side, block variances, and
//! independence diagnostics on pooled `Δτ`.

use serde::{Deserialize, Serialize};
use tbrw_core::estimators::{
    select_sigma, speed_renewal, speed_trajectory, variance_estimators, SigmaChoice, SpeedEstimate,
    VariancePair,
};
use tbrw_core::replicas::ReplicaMap;
use tbrw_core::stats;
use tbrw_core::stopping::{detect_renewals, Block};
use tbrw_core::{run_with, Retention};

use super::simulate::{renewal_rows, RENEWAL_HEADER};
use super::{flatten, guard_for, Ctx, MeanSe};
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenewalSummary {
    pub replicas: usize,
    pub horizon: u64,
    pub drop_first: bool,
    /// Across replicas, `D_N / N`.
    pub speed_trajectory: MeanSe,
    /// Across replicas with at least two blocks, the per-replica ratio estimate.
    pub speed_renewal: MeanSe,
    pub speed_gap: f64,
    pub combined_stderr: f64,
    /// Ratio estimate over all pooled blocks.
    pub pooled: SpeedEstimate,
    pub variance: VariancePair,
    pub sigma: Option<SigmaChoice>,
    pub blocks: usize,
    pub confirmed: usize,
    pub censored: usize,
    pub mean_delta_tau: f64,
    pub mean_delta_depth: f64,
    /// Lag-1 autocorrelation of `Δτ` pooled over within-replica pairs.
    pub lag1: f64,
    pub lag1_pairs: usize,
    /// Half-width of the 95% band around zero, `1.96 / √pairs`.
    pub lag1_halfwidth: f64,
    /// Two-sample KS between each replica's first and second half of `Δτ`, pooled.
    pub ks_halves: Option<f64>,
    pub ks_halves_pvalue: Option<f64>,
}

#[derive(Serialize)]
struct BlockRow {
    replica: usize,
    index: usize,
    delta_tau: u64,
    delta_depth: u64,
}

#[derive(Serialize)]
struct SpeedRow {
    replica: usize,
    speed_trajectory: f64,
    speed_trajectory_se: f64,
    speed_renewal: Option<f64>,
    speed_renewal_se: Option<f64>,
    blocks: usize,
}

struct Replica {
    d_n: f64,
    traj_speed: SpeedEstimate,
    ratio: Option<SpeedEstimate>,
    blocks: Vec<Block>,
    confirmed: usize,
    censored: usize,
    rows: Vec<super::simulate::RenewalRow>,
}

pub fn run(ctx: &mut Ctx) -> Result<(RenewalSummary, Vec<u64>)> {
    let cfg = ctx.cfg;
    let start = ctx.start()?;
    let schedule = cfg.resolved_schedule();
    let seeds = ctx.seeds(cfg.replicas);
    let drop_first = cfg.renewal_stats.drop_first;
    let results = ctx.exec.map(cfg.replicas, |r| -> Result<Replica> {
        let traj = run_with(&start, &schedule, cfg.horizon, seeds[r], Retention::Never)?;
        let record = detect_renewals(&traj, guard_for(cfg, &traj));
        let mut blocks = record.blocks();
        if drop_first && !blocks.is_empty() {
            blocks.remove(0);
        }
        let confirmed = record.confirmed_count();
        Ok(Replica {
            d_n: f64::from(traj.depths()[traj.horizon()]),
            traj_speed: speed_trajectory(&traj, cfg.batches),
            ratio: speed_renewal(&blocks).ok(),
            confirmed,
            censored: record.taus.len() - confirmed,
            rows: renewal_rows(r, &record, traj.depths()[0]),
            blocks,
        })
    })?;
    let reps = flatten(results)?;

    let traj_speeds: Vec<f64> = reps.iter().map(|r| r.traj_speed.value).collect();
    let ratios: Vec<f64> = reps
        .iter()
        .filter_map(|r| r.ratio.map(|e| e.value))
        .collect();
    let speed_trajectory = MeanSe::of(&traj_speeds);
    let speed_renewal = MeanSe::of(&ratios);
    let pooled_blocks: Vec<Block> = reps.iter().flat_map(|r| r.blocks.iter().copied()).collect();
    let pooled = tbrw_core::estimators::speed_renewal(&pooled_blocks)?;
    let variance = variance_estimators(&pooled_blocks, pooled.value)?;
    let d_n: Vec<f64> = reps.iter().map(|r| r.d_n).collect();
    let sigma = select_sigma(&variance, &d_n, cfg.horizon, pooled.value).ok();

    let series: Vec<Vec<f64>> = reps
        .iter()
        .map(|r| r.blocks.iter().map(|b| b.delta_tau as f64).collect())
        .collect();
    let (lag1, lag1_pairs) = stats::pooled_lag1_autocorrelation(&series);
    let (mut first, mut second) = (Vec::new(), Vec::new());
    for s in &series {
        let (a, b) = s.split_at(s.len() / 2);
        first.extend_from_slice(a);
        second.extend_from_slice(b);
    }
    let (ks_halves, ks_halves_pvalue) = if first.is_empty() || second.is_empty() {
        (None, None)
    } else {
        let d = stats::ks_two_sample(&first, &second);
        (
            Some(d),
            Some(stats::ks_two_sample_pvalue(d, first.len(), second.len())),
        )
    };

    let summary = RenewalSummary {
        replicas: cfg.replicas,
        horizon: cfg.horizon,
        drop_first,
        speed_gap: speed_trajectory.mean - speed_renewal.mean,
        combined_stderr: speed_trajectory.stderr.hypot(speed_renewal.stderr),
        speed_trajectory,
        speed_renewal,
        pooled,
        variance,
        sigma,
        blocks: pooled_blocks.len(),
        confirmed: reps.iter().map(|r| r.confirmed).sum(),
        censored: reps.iter().map(|r| r.censored).sum(),
        mean_delta_tau: stats::mean(
            &pooled_blocks
                .iter()
                .map(|b| b.delta_tau as f64)
                .collect::<Vec<_>>(),
        ),
        mean_delta_depth: stats::mean(
            &pooled_blocks
                .iter()
                .map(|b| b.delta_depth as f64)
                .collect::<Vec<_>>(),
        ),
        lag1,
        lag1_pairs,
        lag1_halfwidth: 1.96 / (lag1_pairs.max(1) as f64).sqrt(),
        ks_halves,
        ks_halves_pvalue,
    };

    ctx.sink.csv(
        "speeds.csv",
        reps.iter().enumerate().map(|(i, r)| SpeedRow {
            replica: i,
            speed_trajectory: r.traj_speed.value,
            speed_trajectory_se: r.traj_speed.stderr,
            speed_renewal: r.ratio.map(|e| e.value),
            speed_renewal_se: r.ratio.map(|e| e.stderr),
            blocks: r.blocks.len(),
        }),
    )?;
    ctx.sink.csv(
        "blocks.csv",
        reps.iter().enumerate().flat_map(|(i, r)| {
            r.blocks.iter().enumerate().map(move |(index, b)| BlockRow {
                replica: i,
                index,
                delta_tau: b.delta_tau,
                delta_depth: b.delta_depth,
            })
        }),
    )?;
    ctx.sink.csv_with_header(
        "renewals.csv",
        &RENEWAL_HEADER,
        reps.iter().flat_map(|r| r.rows.iter().cloned()),
    )?;
    Ok((summary, seeds))
}
