//! Running maximum of `|D_n - n v̂| / (σ̂ √(2 n log log n))` per replica.

use serde::{Deserialize, Serialize};
use tbrw_core::estimators::lil_max;
use tbrw_core::replicas::ReplicaMap;
use tbrw_core::stopping::Block;
use tbrw_core::{run_with, Retention};

use super::clt::{blocks_of, normalize, Normalization};
use super::{flatten, Ctx};
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LilSummary {
    pub replicas: usize,
    pub horizon: u64,
    pub n_min: u64,
    pub band: [f64; 2],
    pub normalization: Normalization,
    pub maxima: Vec<f64>,
    pub fraction_in_band: f64,
}

#[derive(Serialize)]
struct Row {
    replica: usize,
    lil_max: f64,
    in_band: bool,
}

pub fn run(ctx: &mut Ctx) -> Result<(LilSummary, Vec<u64>)> {
    let cfg = ctx.cfg;
    let start = ctx.start()?;
    let schedule = cfg.resolved_schedule();
    let seeds = ctx.seeds(cfg.replicas);
    let results = ctx
        .exec
        .map(cfg.replicas, |r| -> Result<(Vec<u32>, Vec<Block>)> {
            let traj = run_with(&start, &schedule, cfg.horizon, seeds[r], Retention::Never)?;
            let blocks = blocks_of(cfg, &traj);
            Ok((traj.depths().to_vec(), blocks))
        })?;
    let (depths, blocks): (Vec<Vec<u32>>, Vec<Vec<Block>>) = flatten(results)?.into_iter().unzip();
    let pooled: Vec<Block> = blocks.into_iter().flatten().collect();
    let d_n: Vec<f64> = depths.iter().map(|d| f64::from(d[d.len() - 1])).collect();
    let normalization = normalize(&pooled, &d_n, cfg.horizon)?;
    let (v, sigma) = (normalization.v_hat, normalization.sigma.sigma);
    let n_min = cfg.lil.n_min as usize;
    let maxima = ctx
        .exec
        .map(depths.len(), |r| lil_max(&depths[r], v, sigma, n_min))?;
    let maxima = maxima
        .into_iter()
        .collect::<tbrw_core::Result<Vec<f64>>>()?;
    let band = cfg.lil.band;
    let inside = |m: f64| band[0] <= m && m <= band[1];
    ctx.sink.csv(
        "lil.csv",
        maxima.iter().enumerate().map(|(replica, &m)| Row {
            replica,
            lil_max: m,
            in_band: inside(m),
        }),
    )?;
    let fraction_in_band =
        maxima.iter().filter(|m| inside(**m)).count() as f64 / maxima.len() as f64;
    let summary = LilSummary {
        replicas: cfg.replicas,
        horizon: cfg.horizon,
        n_min: cfg.lil.n_min,
        band,
        normalization,
        maxima,
        fraction_in_band,
    };
    Ok((summary, seeds))
}
