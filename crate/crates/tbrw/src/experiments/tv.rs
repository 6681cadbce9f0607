//! Maximally coupled pairs: the split time `ζ`, exact agreement before it, and
//! equal first renewals when both confirm before `ζ`.

use serde::{Deserialize, Serialize};
use tbrw_core::coupling::{tv_coupled_run, tv_distance};
use tbrw_core::replicas::ReplicaMap;

use super::{flatten, guard_for, Ctx, MeanSe};
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TvSummary {
    pub runs: usize,
    pub horizon: u64,
    pub d_tv: f64,
    /// Mean of `ζ` over uncensored runs.
    pub zeta: MeanSe,
    pub censored: usize,
    /// `1 / d_TV`, the geometric mean.
    pub zeta_target: f64,
    pub pre_split_failures: usize,
    /// Runs where both `τ₁` confirmed before `ζ`.
    pub tau1_compared: usize,
    pub tau1_mismatches: usize,
}

struct Pair {
    zeta: Option<u64>,
    agree_n: u64,
    pre_split_ok: bool,
    tau1: Option<(u64, u64)>,
}

pub fn run(ctx: &mut Ctx) -> Result<(TvSummary, Vec<u64>)> {
    let cfg = ctx.cfg;
    let (a, b) = (&cfg.coupling_tv.law_a, &cfg.coupling_tv.law_b);
    let seeds = ctx.seeds(cfg.replicas);
    let results = ctx.exec.map(cfg.replicas, |r| -> Result<Pair> {
        let pair = tv_coupled_run(a, b, &cfg.initial, cfg.horizon, seeds[r])?;
        let guard = guard_for(cfg, &pair.traj_a);
        Ok(Pair {
            zeta: pair.split_time.value(),
            agree_n: pair.agree_through(),
            pre_split_ok: pair.states_agree_before_split(),
            tau1: pair.first_renewals_before_split(guard),
        })
    })?;
    let pairs = flatten(results)?;
    let d_tv = tv_distance(a, b);
    let zetas: Vec<f64> = pairs
        .iter()
        .filter_map(|p| p.zeta.map(|z| z as f64))
        .collect();
    let compared: Vec<(u64, u64)> = pairs.iter().filter_map(|p| p.tau1).collect();
    let summary = TvSummary {
        runs: pairs.len(),
        horizon: cfg.horizon,
        d_tv,
        zeta: MeanSe::of(&zetas),
        censored: pairs.len() - zetas.len(),
        zeta_target: 1.0 / d_tv,
        pre_split_failures: pairs.iter().filter(|p| !p.pre_split_ok).count(),
        tau1_compared: compared.len(),
        tau1_mismatches: compared.iter().filter(|(x, y)| x != y).count(),
    };
    ctx.sink.csv_with_header(
        "coupling.csv",
        &["pair", "ζ", "agree_n", "horizon"],
        pairs
            .iter()
            .enumerate()
            .map(|(i, p)| (i, p.zeta, p.agree_n, cfg.horizon)),
    )?;
    Ok((summary, seeds))
}
