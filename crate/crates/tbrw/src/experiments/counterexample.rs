//! Alternating `Ber(p)` / `Ber(q)` schedule whose `D_k / k` oscillates between
//! `v(p)` and `v(q)` at the checkpoints.

use serde::{Deserialize, Serialize};
use tbrw_core::counterexample::{
    build_alternating, checkpoint_speeds, Checkpoint, CheckpointSpeed,
};
use tbrw_core::LeafSchedule;

use super::{seeds, Ctx};
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleSummary {
    pub schedule: LeafSchedule,
    pub checkpoints: Vec<u64>,
    pub v_p: f64,
    pub v_q: f64,
    /// `(v̂(q) - v̂(p)) / 2`.
    pub half_gap: f64,
    pub speeds: Vec<CheckpointSpeed>,
    /// `mean_{j+1} - mean_j`.
    pub gaps: Vec<f64>,
    /// Signs alternate and every gap is at least `half_gap` in size.
    pub oscillates: bool,
    pub details: Vec<Checkpoint>,
}

#[derive(Serialize)]
struct CheckpointRow {
    j: usize,
    k: u64,
    parameter: f64,
    certified: u64,
    tolerance: f64,
    mean: f64,
    stderr: f64,
}

#[derive(Serialize)]
struct PilotRow {
    j: usize,
    m: u64,
    mean: f64,
}

pub fn run(ctx: &mut Ctx) -> Result<(CounterexampleSummary, Vec<u64>)> {
    let cfg = ctx.cfg;
    let c = &cfg.counterexample;
    let mut pilot = c.pilot.clone();
    pilot.speed_horizon = cfg.horizon;
    let built = build_alternating(
        c.p,
        c.q,
        c.j_max,
        &pilot,
        &cfg.initial,
        cfg.master_seed,
        ctx.exec,
    )?;
    let speeds = checkpoint_speeds(
        &built.schedule,
        &built.checkpoints,
        &cfg.initial,
        cfg.replicas,
        cfg.master_seed,
        ctx.exec,
    )?;
    let half_gap = (built.v_q - built.v_p) / 2.0;
    let gaps: Vec<f64> = speeds.windows(2).map(|w| w[1].mean - w[0].mean).collect();
    // Odd checkpoints close Ber(p) blocks, so the first gap should be positive.
    let oscillates = gaps.iter().enumerate().all(|(i, g)| {
        if i % 2 == 0 {
            *g >= half_gap
        } else {
            *g <= -half_gap
        }
    });
    ctx.sink.csv(
        "checkpoints.csv",
        built
            .details
            .iter()
            .zip(&speeds)
            .map(|(d, s)| CheckpointRow {
                j: d.j,
                k: d.k,
                parameter: d.parameter,
                certified: d.certified,
                tolerance: d.tolerance,
                mean: s.mean,
                stderr: s.stderr,
            }),
    )?;
    ctx.sink.csv(
        "pilot_curve.csv",
        built.details.iter().flat_map(|d| {
            d.pilot_curve
                .iter()
                .map(|&(m, mean)| PilotRow { j: d.j, m, mean })
        }),
    )?;
    let summary = CounterexampleSummary {
        schedule: built.schedule,
        checkpoints: built.checkpoints,
        v_p: built.v_p,
        v_q: built.v_q,
        half_gap,
        speeds,
        gaps,
        oscillates,
        details: built.details,
    };
    Ok((
        summary,
        seeds(cfg.master_seed, cfg.replicas, "counterexample-verify"),
    ))
}
