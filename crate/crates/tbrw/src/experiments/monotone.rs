//! Monotone coupling of a `Q ∈ Q_κ` walk with a `Ber(κ)` walk: hitting-time
//! domination and the vertex-visibility rules.

use serde::{Deserialize, Serialize};
use tbrw_core::coupling::monotone_pair_run;
use tbrw_core::replicas::ReplicaMap;
use tbrw_core::stopping::hitting_time;
use tbrw_core::NodeId;

use super::{flatten, Ctx};
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotoneSummary {
    pub runs: usize,
    pub horizon: u64,
    pub kappa: f64,
    pub target: u32,
    /// Fraction of runs where the `Q`-walk hits the target within the horizon.
    pub hit_q: f64,
    pub hit_kappa: f64,
    pub domination_failures: usize,
    pub visibility_failures: usize,
    /// Empirical `ξ` frequencies of the `Q`-walk, `(k, frequency)`.
    pub q_xi_frequencies: Vec<(u32, f64)>,
    /// TV distance between those frequencies and `Q`.
    pub q_xi_tv: f64,
    /// Fraction of κ-steps with `ξ = 1`.
    pub kappa_xi_mean: f64,
}

#[derive(Clone, Debug, Serialize)]
struct Row {
    replica: usize,
    seed: u64,
    hit_q: Option<u64>,
    hit_kappa: Option<u64>,
    decoupled_at: u64,
    domination_ok: bool,
    visibility_ok: bool,
}

pub fn run(ctx: &mut Ctx) -> Result<(MonotoneSummary, Vec<u64>)> {
    let cfg = ctx.cfg;
    let m = &cfg.coupling_monotone;
    let seeds = ctx.seeds(cfg.replicas);
    let results = ctx
        .exec
        .map(cfg.replicas, |r| -> Result<(Row, Vec<u64>, (u64, u64))> {
            let pair = monotone_pair_run(&m.law, m.kappa, &cfg.initial, cfg.horizon, seeds[r])?;
            let target = NodeId(m.target);
            let row = Row {
                replica: r,
                seed: seeds[r],
                hit_q: hitting_time(&pair.q, target, 0)?.value(),
                hit_kappa: hitting_time(&pair.kappa, target, 0)?.value(),
                decoupled_at: pair.decoupled_at,
                domination_ok: pair.domination_holds(),
                visibility_ok: pair.visibility_respected(),
            };
            let mut counts =
                vec![0u64; m.law.support().iter().max().map_or(1, |k| *k as usize + 1)];
            for &x in &pair.q.xi()[1..] {
                if let Some(c) = counts.get_mut(x as usize) {
                    *c += 1;
                }
            }
            let k_xi = &pair.kappa.xi()[1..];
            Ok((
                row,
                counts,
                (k_xi.iter().map(|x| u64::from(*x)).sum(), k_xi.len() as u64),
            ))
        })?;
    let results = flatten(results)?;
    let mut counts = vec![0u64; results.first().map_or(0, |r| r.1.len())];
    let (mut k_ones, mut k_steps) = (0u64, 0u64);
    for (_, c, (ones, steps)) in &results {
        for (acc, x) in counts.iter_mut().zip(c) {
            *acc += x;
        }
        k_ones += ones;
        k_steps += steps;
    }
    let total = counts.iter().sum::<u64>().max(1) as f64;
    let q_xi_frequencies: Vec<(u32, f64)> = counts
        .iter()
        .enumerate()
        .map(|(k, c)| (k as u32, *c as f64 / total))
        .collect();
    let q_xi_tv = 0.5
        * q_xi_frequencies
            .iter()
            .map(|(k, f)| (f - m.law.prob(*k)).abs())
            .sum::<f64>();
    let rows: Vec<Row> = results.into_iter().map(|r| r.0).collect();
    let n = rows.len() as f64;
    let summary = MonotoneSummary {
        runs: rows.len(),
        horizon: cfg.horizon,
        kappa: m.kappa,
        target: m.target,
        hit_q: rows.iter().filter(|r| r.hit_q.is_some()).count() as f64 / n,
        hit_kappa: rows.iter().filter(|r| r.hit_kappa.is_some()).count() as f64 / n,
        domination_failures: rows.iter().filter(|r| !r.domination_ok).count(),
        visibility_failures: rows.iter().filter(|r| !r.visibility_ok).count(),
        q_xi_frequencies,
        q_xi_tv,
        kappa_xi_mean: k_ones as f64 / k_steps.max(1) as f64,
    };
    ctx.sink.csv("monotone.csv", rows.iter())?;
    Ok((summary, seeds))
}
