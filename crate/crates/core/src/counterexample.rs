//! The alternating Ber(p)/Ber(q) schedule whose mean speed oscillates.
//!
//! Checkpoint `k_j = n_j + j·k_{j-1}`, where `n_j` is the first point of a
//! geometric grid from which the pilot estimate of `E[D_m / m]`, started from the
//! state reached at `k_{j-1}` and run with the block's parameter, stays within
//! `1/(2j) + slack` of the pilot speed for every grid point up to the budget.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::engine::{advance, make_initial, InitialTree};
use crate::error::{Error, Result};
use crate::estimators::speed_curve;
use crate::replicas::ReplicaMap;
use crate::rng;
use crate::schedule::{check_probability, LeafSchedule};
use crate::stats;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PilotConfig {
    /// Pilot replicas per checkpoint.
    pub replicas: usize,
    /// Added to the `1/(2j)` tolerance.
    pub slack: f64,
    /// Ratio of consecutive grid points.
    pub grid_ratio: f64,
    /// Largest `m` inspected per checkpoint.
    pub budget: u64,
    /// `k_0`: the first checkpoint is sought above this step.
    pub k0: u64,
    /// Horizon of the runs that estimate `v(p)` and `v(q)`.
    pub speed_horizon: u64,
    pub speed_replicas: usize,
}

impl Default for PilotConfig {
    fn default() -> Self {
        PilotConfig {
            replicas: 200,
            slack: 0.0,
            grid_ratio: 1.25,
            budget: 200_000,
            k0: 0,
            speed_horizon: 20_000,
            speed_replicas: 100,
        }
    }
}

impl PilotConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicas < 2 {
            return Err(crate::error::invalid(
                "pilot.replicas",
                "must be at least 2",
            ));
        }
        if !(self.slack >= 0.0 && self.slack.is_finite()) {
            return Err(crate::error::invalid(
                "pilot.slack",
                "must be finite and nonnegative",
            ));
        }
        if !(self.grid_ratio > 1.0 && self.grid_ratio.is_finite()) {
            return Err(crate::error::invalid("pilot.grid_ratio", "must exceed 1"));
        }
        if self.budget == 0 || self.speed_horizon == 0 || self.speed_replicas == 0 {
            return Err(crate::error::invalid(
                "pilot",
                "budget, speed_horizon and speed_replicas must be positive",
            ));
        }
        Ok(())
    }

    /// `1, ..., budget` with consecutive ratio about `grid_ratio`.
    pub fn grid(&self) -> Vec<u64> {
        let mut grid = vec![1u64];
        while let Some(&m) = grid.last() {
            if m >= self.budget {
                break;
            }
            let next = (libm::ceil(m as f64 * self.grid_ratio) as u64)
                .max(m + 1)
                .min(self.budget);
            grid.push(next);
        }
        grid
    }
}

/// One certified checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub j: usize,
    /// Leaf parameter of block `(k_{j-1}, k_j]`.
    pub parameter: f64,
    pub tolerance: f64,
    /// Certified `n_j`.
    pub certified: u64,
    pub k: u64,
    /// `(m, pilot mean of D_m / m)` over the grid.
    pub pilot_curve: Vec<(u64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlternatingConstruction {
    pub schedule: LeafSchedule,
    pub checkpoints: Vec<u64>,
    pub v_p: f64,
    pub v_q: f64,
    pub details: Vec<Checkpoint>,
}

/// Build the alternating schedule with `j_max` checkpoints.
pub fn build_alternating<M: ReplicaMap>(
    p: f64,
    q: f64,
    j_max: usize,
    pilot: &PilotConfig,
    initial: &InitialTree,
    seed: u64,
    executor: &M,
) -> Result<AlternatingConstruction> {
    check_probability("p", p)?;
    check_probability("q", q)?;
    if !(0.0 < p && p < q) {
        return Err(crate::error::invalid("p", "need 0 < p < q"));
    }
    if j_max == 0 {
        return Err(crate::error::invalid("j_max", "must be at least 1"));
    }
    pilot.validate()?;
    let start = make_initial(initial)?;
    let speeds = speed_curve(
        &[p, q],
        pilot.speed_replicas,
        pilot.speed_horizon,
        seed,
        initial,
        executor,
    )?;
    let (v_p, v_q) = (speeds[0].v_hat, speeds[1].v_hat);
    let grid = pilot.grid();

    let mut checkpoints: Vec<u64> = Vec::with_capacity(j_max);
    let mut details = Vec::with_capacity(j_max);
    for j in 1..=j_max {
        let (parameter, target) = if j % 2 == 1 { (p, v_p) } else { (q, v_q) };
        let prefix = checkpoints.last().copied().unwrap_or(0);
        let prefix_schedule = LeafSchedule::Alternating {
            p,
            q,
            checkpoints: checkpoints.clone(),
        };
        let block = LeafSchedule::Bernoulli { p: parameter };
        let tag = format!("counterexample-pilot-{j}");
        let samples = executor.map(pilot.replicas, |r| {
            let mut stream = rng::stream(rng::replica_seed(seed, r as u64, &tag));
            let mut state = start.clone();
            if prefix > 0 {
                let sampler = prefix_schedule.instantiate(&mut stream);
                advance(&mut state, &sampler, prefix, &mut stream);
            }
            let offset = state.step;
            let sampler = block.instantiate(&mut stream);
            let mut out = Vec::with_capacity(grid.len());
            let mut done = 0;
            for &m in &grid {
                advance(&mut state, &sampler, m - done, &mut stream);
                done = m;
                debug_assert_eq!(state.step, offset + m);
                out.push(f64::from(state.depth()) / m as f64);
            }
            out
        })?;
        let pilot_curve: Vec<(u64, f64)> = grid
            .iter()
            .enumerate()
            .map(|(g, m)| {
                (
                    *m,
                    stats::mean(&samples.iter().map(|s| s[g]).collect::<Vec<_>>()),
                )
            })
            .collect();
        let tolerance = 1.0 / (2.0 * j as f64) + pilot.slack;
        let within = |v: f64| (v - target).abs() < tolerance;
        // First grid point from which every later grid point stays inside.
        let first_good = pilot_curve
            .iter()
            .rposition(|(_, v)| !within(*v))
            .map_or(0, |i| i + 1);
        let certified = match pilot_curve.get(first_good) {
            Some((m, _)) if j > 1 || *m > pilot.k0 => *m,
            Some(_) => pilot_curve
                .iter()
                .map(|(m, _)| *m)
                .find(|m| *m > pilot.k0)
                .ok_or(Error::PilotBudgetExhausted {
                    checkpoint: j,
                    budget: pilot.budget,
                })?,
            None => {
                return Err(Error::PilotBudgetExhausted {
                    checkpoint: j,
                    budget: pilot.budget,
                })
            }
        };
        let k = certified + j as u64 * prefix;
        checkpoints.push(k);
        details.push(Checkpoint {
            j,
            parameter,
            tolerance,
            certified,
            k,
            pilot_curve,
        });
    }
    let schedule = LeafSchedule::Alternating {
        p,
        q,
        checkpoints: checkpoints.clone(),
    };
    schedule.validate()?;
    Ok(AlternatingConstruction {
        schedule,
        checkpoints,
        v_p,
        v_q,
        details,
    })
}

/// Mean and standard error of `D_{k}/k` at each checkpoint over fresh replicas.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointSpeed {
    pub j: usize,
    pub k: u64,
    pub mean: f64,
    pub stderr: f64,
}

pub fn checkpoint_speeds<M: ReplicaMap>(
    schedule: &LeafSchedule,
    checkpoints: &[u64],
    initial: &InitialTree,
    replicas: usize,
    seed: u64,
    executor: &M,
) -> Result<Vec<CheckpointSpeed>> {
    if replicas < 2 {
        return Err(crate::error::invalid("replicas", "must be at least 2"));
    }
    let start = make_initial(initial)?;
    let samples = executor.map(replicas, |r| {
        let mut stream = rng::stream(rng::replica_seed(seed, r as u64, "counterexample-verify"));
        let sampler = schedule.instantiate(&mut stream);
        let mut state = start.clone();
        checkpoints
            .iter()
            .map(|&k| {
                let steps = k - state.step;
                advance(&mut state, &sampler, steps, &mut stream);
                f64::from(state.depth()) / k as f64
            })
            .collect::<Vec<f64>>()
    })?;
    Ok(checkpoints
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let col: Vec<f64> = samples.iter().map(|s| s[i]).collect();
            CheckpointSpeed {
                j: i + 1,
                k,
                mean: stats::mean(&col),
                stderr: stats::std_error(&col),
            }
        })
        .collect())
}
