//! `v̂(p)` over a grid of Bernoulli parameters.

use serde::{Deserialize, Serialize};
use tbrw_core::estimators::{speed_curve, SpeedCurveRow};
use tbrw_core::rng::replica_seed;

use super::Ctx;
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedCurveSummary {
    pub rows: Vec<SpeedCurveRow>,
    /// Grid points with `v̂(p) > p + 3 SE`.
    pub bound_violations: Vec<f64>,
    /// `(v̂(last) - v̂(first)) / combined SE`.
    pub end_to_end_z: f64,
}

pub fn run(ctx: &mut Ctx) -> Result<(SpeedCurveSummary, Vec<u64>)> {
    let cfg = ctx.cfg;
    let grid = &cfg.speed_curve.p_grid;
    let rows = speed_curve(
        grid,
        cfg.replicas,
        cfg.horizon,
        cfg.master_seed,
        &cfg.initial,
        ctx.exec,
    )?;
    let seeds = (0..grid.len() * cfg.replicas)
        .map(|i| replica_seed(cfg.master_seed, i as u64, "speed-curve"))
        .collect();
    let bound_violations = rows
        .iter()
        .filter(|r| r.v_hat > r.p + 3.0 * r.stderr)
        .map(|r| r.p)
        .collect();
    let (first, last) = (rows[0], rows[rows.len() - 1]);
    let se = first.stderr.hypot(last.stderr);
    let end_to_end_z = if se > 0.0 {
        (last.v_hat - first.v_hat) / se
    } else {
        f64::INFINITY
    };
    ctx.sink.csv("speed_curve.csv", rows.iter())?;
    Ok((
        SpeedCurveSummary {
            rows,
            bound_violations,
            end_to_end_z,
        },
        seeds,
    ))
}
