//! Grand coupling: invariants, the p-monotone vertex counts, one marginal
//! against direct runs, and the coalescence bound.

use serde::{Deserialize, Serialize};
use tbrw_core::coupling::{
    coalescence_probability, extract_instance, grand_run, GrandEvent, GrandRun,
};
use tbrw_core::replicas::ReplicaMap;
use tbrw_core::{run_with, stats, LeafSchedule, Retention};

use super::{flatten, seeds, Ctx};
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunCheck {
    pub replica: usize,
    pub seed: u64,
    /// Violation reported by the per-step invariant check, if any.
    pub invariant_error: Option<String>,
    /// `V_n` nondecreasing along the grid for every `n`.
    pub monotone: bool,
    /// `V_n^{(1)} = |T_0| + n` for every `n`.
    pub full_growth: bool,
    /// Every grid instance matches `|T_0| + #{k ≤ n : U_k < p}`.
    pub formula: bool,
    pub marginal_depth: u32,
    pub agree: bool,
    pub sufficient: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Batch {
    pub runs: usize,
    pub agree_freq: f64,
    pub sufficient_freq: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrandSummary {
    pub runs: usize,
    pub horizon: u64,
    pub invariant_failures: usize,
    pub monotone_failures: usize,
    pub full_growth_failures: usize,
    pub formula_failures: usize,
    pub marginal_p: f64,
    pub marginal_step: u64,
    pub marginal_ks: f64,
    pub marginal_pvalue: f64,
    pub marginal_runs: usize,
    pub coalescence_target: f64,
    pub sufficient_freq: f64,
    /// Binomial SE of the sufficient-event frequency at the target probability.
    pub sufficient_se: f64,
    pub agree_freq: f64,
    pub inclusion_violations: usize,
    pub batches: Vec<Batch>,
}

#[derive(Serialize)]
struct LogNode {
    node: u32,
    parent: u32,
    label: Vec<[f64; 2]>,
}

#[derive(Serialize)]
struct LogLine {
    step: u64,
    #[serde(rename = "U")]
    u: f64,
    /// `U · 2^64` exactly.
    u_raw: u64,
    split: (u32, u32),
    ball_moves: Vec<(u32, u32, u32)>,
    new_nodes: Vec<LogNode>,
}

fn log_line(ev: &GrandEvent) -> LogLine {
    LogLine {
        step: ev.step,
        u: ev.u.value(),
        u_raw: ev.u.raw() as u64,
        split: ev.split,
        ball_moves: ev
            .ball_moves
            .iter()
            .map(|(b, f, t)| (*b, f.0, t.0))
            .collect(),
        new_nodes: ev
            .new_nodes
            .iter()
            .map(|nn| LogNode {
                node: nn.node.0,
                parent: nn.parent.0,
                label: nn
                    .label
                    .parts()
                    .iter()
                    .map(|iv| [iv.lo.value(), iv.hi.value()])
                    .collect(),
            })
            .collect(),
    }
}

fn check_run(
    run: &GrandRun,
    grid: &[f64],
    marginal: (f64, u64),
    coal: (f64, f64, u64),
) -> Result<RunCheck> {
    let horizon = run.horizon();
    let base = run.initial.tree.len();
    let instances = grid
        .iter()
        .map(|p| extract_instance(run, *p))
        .collect::<tbrw_core::Result<Vec<_>>>()?;
    let monotone = (0..=horizon).all(|n| {
        instances
            .windows(2)
            .all(|w| w[0].node_count_at(n) <= w[1].node_count_at(n))
    });
    let formula = grid.iter().zip(&instances).all(|(p, t)| {
        (0..=horizon)
            .all(|n| t.node_count_at(n) == tbrw_core::coupling::vertex_count_formula(run, *p, n))
    });
    let full = extract_instance(run, 1.0)?;
    let full_growth = (0..=horizon).all(|n| full.node_count_at(n) == base + n);
    let marginal_depth = extract_instance(run, marginal.0)?.depths()[marginal.1 as usize];
    let c = coalescence_probability(std::slice::from_ref(run), coal.0, coal.1, coal.2 as usize)?;
    Ok(RunCheck {
        replica: 0,
        seed: run.seed,
        invariant_error: None,
        monotone,
        full_growth,
        formula,
        marginal_depth,
        agree: c.agree == 1,
        sufficient: c.sufficient == 1,
    })
}

pub fn run(ctx: &mut Ctx) -> Result<(GrandSummary, Vec<u64>)> {
    let cfg = ctx.cfg;
    let g = &cfg.coupling_grand;
    let run_seeds = ctx.seeds(cfg.replicas);
    let results = ctx.exec.map(
        cfg.replicas,
        |r| -> Result<(RunCheck, Option<Vec<LogLine>>)> {
            let seed = run_seeds[r];
            let run = match grand_run(&cfg.initial, cfg.horizon, seed, g.check_invariants) {
                Ok(run) => run,
                Err(e) => {
                    let check = RunCheck {
                        replica: r,
                        seed,
                        invariant_error: Some(e.to_string()),
                        monotone: false,
                        full_growth: false,
                        formula: false,
                        marginal_depth: 0,
                        agree: false,
                        sufficient: false,
                    };
                    return Ok((check, None));
                }
            };
            let mut check = check_run(
                &run,
                &g.p_grid,
                (g.marginal_p, g.marginal_step),
                (g.coalescence_p, g.coalescence_q, g.coalescence_n),
            )?;
            check.replica = r;
            let log = (r < g.log_runs).then(|| run.events.iter().map(log_line).collect());
            Ok((check, log))
        },
    )?;
    let (checks, logs): (Vec<RunCheck>, Vec<Option<Vec<LogLine>>>) =
        flatten(results)?.into_iter().unzip();

    let m = g.marginal_runs.unwrap_or(cfg.replicas);
    let direct_seeds = seeds(cfg.master_seed, m, "coupling-grand-direct");
    let start = ctx.start()?;
    let direct = LeafSchedule::bernoulli(g.marginal_p)?;
    let direct_depths = ctx.exec.map(m, |r| -> Result<f64> {
        let traj = run_with(
            &start,
            &direct,
            g.marginal_step,
            direct_seeds[r],
            Retention::Never,
        )?;
        Ok(f64::from(traj.depths()[g.marginal_step as usize]))
    })?;
    let direct_depths = flatten(direct_depths)?;
    let extracted: Vec<f64> = checks[..m]
        .iter()
        .filter(|c| c.invariant_error.is_none())
        .map(|c| f64::from(c.marginal_depth))
        .collect();
    let marginal_ks = stats::ks_two_sample(&extracted, &direct_depths);
    let marginal_pvalue =
        stats::ks_two_sample_pvalue(marginal_ks, extracted.len(), direct_depths.len());

    let frac = |cs: &[RunCheck], f: fn(&RunCheck) -> bool| {
        cs.iter().filter(|c| f(c)).count() as f64 / cs.len() as f64
    };
    let size = checks.len().div_ceil(g.batches);
    let batches = checks
        .chunks(size)
        .map(|cs| Batch {
            runs: cs.len(),
            agree_freq: frac(cs, |c| c.agree),
            sufficient_freq: frac(cs, |c| c.sufficient),
        })
        .collect();
    let target = (1.0 - (g.coalescence_q - g.coalescence_p).abs()).powi(g.coalescence_n as i32);
    let count = |f: fn(&RunCheck) -> bool| checks.iter().filter(|c| f(c)).count();
    let summary = GrandSummary {
        runs: checks.len(),
        horizon: cfg.horizon,
        invariant_failures: count(|c| c.invariant_error.is_some()),
        monotone_failures: count(|c| !c.monotone),
        full_growth_failures: count(|c| !c.full_growth),
        formula_failures: count(|c| !c.formula),
        marginal_p: g.marginal_p,
        marginal_step: g.marginal_step,
        marginal_ks,
        marginal_pvalue,
        marginal_runs: m,
        coalescence_target: target,
        sufficient_freq: frac(&checks, |c| c.sufficient),
        sufficient_se: (target * (1.0 - target) / checks.len() as f64).sqrt(),
        agree_freq: frac(&checks, |c| c.agree),
        inclusion_violations: count(|c| c.sufficient && !c.agree),
        batches,
    };

    ctx.sink
        .csv("coupling_grand.csv", checks.iter().map(CsvRow::from))?;
    for (r, log) in logs.into_iter().enumerate() {
        if let Some(lines) = log {
            ctx.sink.jsonl(&format!("grand_events_{r}.jsonl"), lines)?;
        }
    }
    Ok((summary, run_seeds))
}

#[derive(Serialize)]
struct CsvRow {
    replica: usize,
    seed: u64,
    invariants_ok: bool,
    monotone: bool,
    full_growth: bool,
    formula: bool,
    marginal_depth: u32,
    agree: bool,
    sufficient: bool,
}

impl From<&RunCheck> for CsvRow {
    fn from(c: &RunCheck) -> Self {
        CsvRow {
            replica: c.replica,
            seed: c.seed,
            invariants_ok: c.invariant_error.is_none(),
            monotone: c.monotone,
            full_growth: c.full_growth,
            formula: c.formula,
            marginal_depth: c.marginal_depth,
            agree: c.agree,
            sufficient: c.sufficient,
        }
    }
}
