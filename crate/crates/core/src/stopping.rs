//! Exact post-hoc detection of renewal times `τ_k`, the auxiliary times `η_k`,
//! hitting times and father-return times on a finished trajectory.
//!
//! A step `n ≥ 1` is a renewal candidate iff the walker arrived on a leaf, its
//! depth is a strict record over `0..n`, and the depth never drops below it on
//! `n+1..=N`. The future clause can only be checked up to the horizon, so
//! candidates with fewer than `guard` post-steps are kept but flagged censored.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::engine::Trajectory;
use crate::error::{Error, Result};
use crate::tree::NodeId;

/// One renewal block `(τ_{k+1} - τ_k, D_{τ_{k+1}} - D_{τ_k})`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub delta_tau: u64,
    pub delta_depth: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenewalRecord {
    pub taus: Vec<u64>,
    pub depths: Vec<u32>,
    pub censored: Vec<bool>,
    /// Post-τ steps actually inspected (`N - τ`).
    pub confirm_margin: Vec<u64>,
    pub horizon: u64,
    pub guard: u64,
}

impl RenewalRecord {
    /// Confirmed (uncensored) renewals as `(τ, D_τ)`.
    pub fn confirmed(&self) -> impl Iterator<Item = (u64, u32)> + '_ {
        self.taus
            .iter()
            .zip(&self.depths)
            .zip(&self.censored)
            .filter(|(_, c)| !**c)
            .map(|((t, d), _)| (*t, *d))
    }

    pub fn confirmed_count(&self) -> usize {
        self.censored.iter().filter(|c| !**c).count()
    }

    /// First confirmed renewal, if any.
    pub fn first(&self) -> Option<u64> {
        self.confirmed().next().map(|(t, _)| t)
    }

    /// Blocks between consecutive confirmed renewals. Censored candidates sit at
    /// the end of the record, so their blocks are dropped, never truncated.
    pub fn blocks(&self) -> Vec<Block> {
        let confirmed: Vec<(u64, u32)> = self.confirmed().collect();
        confirmed
            .windows(2)
            .map(|w| Block {
                delta_tau: w[1].0 - w[0].0,
                delta_depth: u64::from(w[1].1 - w[0].1),
            })
            .collect()
    }
}

/// Default guard: twice the mean gap between candidates, at least 1.
pub fn default_guard(traj: &Trajectory) -> u64 {
    let candidates = detect_renewals(traj, 0).taus.len().max(1) as u64;
    (2 * traj.horizon() as u64).div_ceil(candidates).max(1)
}

pub fn detect_renewals(traj: &Trajectory, guard: u64) -> RenewalRecord {
    let depths = traj.depths();
    let leaf = traj.leaf_at_arrival();
    let horizon = traj.horizon();

    // suffix_min[n] = min(depth[n..=N]); the sentinel past the end is +∞.
    let mut suffix_min = alloc::vec![u32::MAX; horizon + 2];
    for n in (0..=horizon).rev() {
        suffix_min[n] = depths[n].min(suffix_min[n + 1]);
    }

    let mut record = RenewalRecord {
        taus: Vec::new(),
        depths: Vec::new(),
        censored: Vec::new(),
        confirm_margin: Vec::new(),
        horizon: horizon as u64,
        guard,
    };
    let mut running_max = depths[0];
    for n in 1..=horizon {
        let d = depths[n];
        if leaf[n] && d > running_max && suffix_min[n + 1] >= d {
            let margin = (horizon - n) as u64;
            record.taus.push(n as u64);
            record.depths.push(d);
            record.censored.push(margin < guard);
            record.confirm_margin.push(margin);
        }
        running_max = running_max.max(d);
    }
    record
}

/// `η_0 = 0`, `η_k` = first `n > η_{k-1}` on a leaf strictly deeper than `D_{η_{k-1}}`.
pub fn detect_eta(traj: &Trajectory) -> Vec<u64> {
    let depths = traj.depths();
    let leaf = traj.leaf_at_arrival();
    let mut etas = Vec::new();
    let mut level = depths[0];
    for n in 1..depths.len() {
        if leaf[n] && depths[n] > level {
            etas.push(n as u64);
            level = depths[n];
        }
    }
    etas
}

/// A stopping time observed up to the horizon.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CensoredTime {
    At(u64),
    /// Not reached by the horizon.
    Censored {
        horizon: u64,
    },
}

impl CensoredTime {
    pub fn value(self) -> Option<u64> {
        match self {
            CensoredTime::At(t) => Some(t),
            CensoredTime::Censored { .. } => None,
        }
    }

    pub fn is_censored(self) -> bool {
        matches!(self, CensoredTime::Censored { .. })
    }
}

/// First `n ≥ from_step` with `X_n = target`.
pub fn hitting_time(traj: &Trajectory, target: NodeId, from_step: u64) -> Result<CensoredTime> {
    if target.index() >= traj.final_node_count() {
        return Err(Error::UnknownNode(target.index()));
    }
    let horizon = traj.horizon() as u64;
    if from_step > horizon {
        return Err(crate::error::invalid("from_step", "beyond the horizon"));
    }
    Ok(first_visit(traj, target, from_step as usize))
}

fn first_visit(traj: &Trajectory, target: NodeId, from: usize) -> CensoredTime {
    traj.positions()[from..]
        .iter()
        .position(|p| *p == target)
        .map(|i| CensoredTime::At((from + i) as u64))
        .unwrap_or(CensoredTime::Censored {
            horizon: traj.horizon() as u64,
        })
}

/// `H̃_k`: first visit to the father of `X_{η_k}` after `η_k`, one entry per `η_k`.
///
/// `X_{η_k}` has degree one and is not the root, so the walker arrived from its
/// father: `f(X_{η_k}) = X_{η_k - 1}`.
pub fn father_return_times(traj: &Trajectory) -> Vec<CensoredTime> {
    let positions = traj.positions();
    detect_eta(traj)
        .into_iter()
        .map(|eta| {
            let father = positions[eta as usize - 1];
            first_visit(traj, father, eta as usize + 1)
        })
        .collect()
}

/// Consecutive differences of confirmed renewals, optionally without the first block.
pub fn renewal_blocks(record: &RenewalRecord, drop_first: bool) -> Result<Vec<Block>> {
    let needed = if drop_first { 2 } else { 1 };
    let have = record.confirmed_count();
    if have < needed {
        return Err(Error::InsufficientBlocks { needed, have });
    }
    let mut blocks = record.blocks();
    if drop_first && !blocks.is_empty() {
        blocks.remove(0);
    }
    Ok(blocks)
}
