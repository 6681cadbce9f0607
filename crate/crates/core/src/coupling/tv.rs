//! Maximal coupling of two leaf laws and the pair of walks driven by it.

use alloc::vec::Vec;
use rand::Rng;

use crate::engine::{make_initial, InitialTree, Retention, SimState, Trajectory};
use crate::error::Result;
use crate::rng::{self, Stream};
use crate::schedule::LeafLaw;
use crate::stopping::{detect_renewals, CensoredTime};

/// `½ Σ_k |Q(k) − Q2(k)|` over the union of supports.
pub fn tv_distance(q: &LeafLaw, q2: &LeafLaw) -> f64 {
    let mut total = 0.0;
    for (k, p) in q.support().iter().zip(q.probs()) {
        total += (p - q2.prob(*k)).abs();
    }
    for (k, p) in q2.support().iter().zip(q2.probs()) {
        if q.prob(*k) == 0.0 {
            total += p;
        }
    }
    (0.5 * total).clamp(0.0, 1.0)
}

/// Precomputed overlap and residual laws for repeated coupled draws.
#[derive(Clone, Debug)]
pub struct MaximalCoupling {
    distance: f64,
    overlap: Option<LeafLaw>,
    residual_a: Option<LeafLaw>,
    residual_b: Option<LeafLaw>,
}

impl MaximalCoupling {
    pub fn new(q: &LeafLaw, q2: &LeafLaw) -> Self {
        let distance = tv_distance(q, q2);
        let mut support: Vec<u32> = q.support().iter().chain(q2.support()).copied().collect();
        support.sort_unstable();
        support.dedup();
        let overlap_w: Vec<(u32, f64)> = support
            .iter()
            .map(|k| (*k, q.prob(*k).min(q2.prob(*k))))
            .collect();
        let residual = |law: &LeafLaw| -> Vec<(u32, f64)> {
            support
                .iter()
                .map(|k| (*k, (law.prob(*k) - q.prob(*k).min(q2.prob(*k))).max(0.0)))
                .collect()
        };
        MaximalCoupling {
            distance,
            overlap: if distance < 1.0 {
                LeafLaw::from_weights(overlap_w).ok()
            } else {
                None
            },
            residual_a: if distance > 0.0 {
                LeafLaw::from_weights(residual(q)).ok()
            } else {
                None
            },
            residual_b: if distance > 0.0 {
                LeafLaw::from_weights(residual(q2)).ok()
            } else {
                None
            },
        }
    }

    pub fn distance(&self) -> f64 {
        self.distance
    }

    /// One joint draw `(ξ, ξ', equal)` with `P(equal) = 1 − d_TV`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (u32, u32, bool) {
        let u: f64 = rng.random();
        match (&self.overlap, &self.residual_a, &self.residual_b) {
            (Some(overlap), _, _) if u >= self.distance => {
                let x = overlap.sample(rng);
                (x, x, true)
            }
            (_, Some(a), Some(b)) => (a.sample(rng), b.sample(rng), false),
            // Only reachable through rounding when one side has no mass.
            (Some(overlap), _, _) => {
                let x = overlap.sample(rng);
                (x, x, true)
            }
            _ => unreachable!("a law always has positive mass"),
        }
    }
}

/// One maximal-coupling draw. Build a [`MaximalCoupling`] for repeated draws.
pub fn max_couple<R: Rng + ?Sized>(q: &LeafLaw, q2: &LeafLaw, rng: &mut R) -> (u32, u32, bool) {
    MaximalCoupling::new(q, q2).sample(rng)
}

/// Two walks sharing tree and jumps until their leaf draws first differ.
#[derive(Clone, Debug)]
pub struct CoupledPair {
    pub traj_a: Trajectory,
    pub traj_b: Trajectory,
    /// `ζ`, the first step with `ξ ≠ ξ'`.
    pub split_time: CensoredTime,
    /// `equal[n]` is `ξ_n = ξ'_n`; `equal[0]` is true by convention.
    pub equal: Vec<bool>,
}

impl CoupledPair {
    /// Last `n` such that positions and leaf counts agree on `0..=n`.
    pub fn agree_through(&self) -> u64 {
        let (a, b) = (&self.traj_a, &self.traj_b);
        let n = a.horizon().min(b.horizon());
        (0..=n)
            .find(|&i| a.positions()[i] != b.positions()[i] || a.xi()[i] != b.xi()[i])
            .map_or(n as u64, |i| i as u64 - 1)
    }

    /// States agree at every step strictly before `ζ`.
    pub fn states_agree_before_split(&self) -> bool {
        match self.split_time {
            CensoredTime::At(z) => self.agree_through() + 1 >= z,
            CensoredTime::Censored { horizon } => self.agree_through() == horizon,
        }
    }

    /// `τ₁` on both walks with the given guard, if both are confirmed before `ζ`.
    pub fn first_renewals_before_split(&self, guard: u64) -> Option<(u64, u64)> {
        let ta = detect_renewals(&self.traj_a, guard).first()?;
        let tb = detect_renewals(&self.traj_b, guard).first()?;
        let before = |t: u64| match self.split_time {
            CensoredTime::At(z) => t < z,
            CensoredTime::Censored { .. } => true,
        };
        (before(ta) && before(tb)).then_some((ta, tb))
    }
}

/// Run a maximally coupled pair for `horizon` steps. Jumps are shared until `ζ`;
/// from `ζ` on each walk draws from its own stream split off at `ζ`.
pub fn tv_coupled_run(
    q: &LeafLaw,
    q2: &LeafLaw,
    initial: &InitialTree,
    horizon: u64,
    seed: u64,
) -> Result<CoupledPair> {
    if horizon == 0 {
        return Err(crate::error::invalid("horizon", "must be at least 1"));
    }
    let coupling = MaximalCoupling::new(q, q2);
    let mut shared = rng::stream(seed);
    let mut a = make_initial(initial)?;
    let mut b = a.clone();
    let mut traj_a = Trajectory::with_capacity(horizon as usize, &a);
    let mut traj_b = Trajectory::with_capacity(horizon as usize, &b);
    let mut equal = Vec::with_capacity(horizon as usize + 1);
    equal.push(true);
    let mut split: Option<(u64, Stream, Stream)> = None;

    for n in 1..=horizon {
        match &mut split {
            None => {
                let (xa, xb, eq) = coupling.sample(&mut shared);
                if eq {
                    a.attach_leaves(xa);
                    b.attach_leaves(xb);
                    let degree = a.tree.degree(a.position);
                    let k = shared.random_range(0..degree);
                    a.jump_to_neighbor(k);
                    b.jump_to_neighbor(k);
                } else {
                    let mut sa = rng::split(&mut shared);
                    let mut sb = rng::split(&mut shared);
                    a.step(xa, &mut sa);
                    b.step(xb, &mut sb);
                    split = Some((n, sa, sb));
                }
                equal.push(xa == xb);
                traj_a.record(&a, xa);
                traj_b.record(&b, xb);
            }
            Some((_, sa, sb)) => {
                let xa = q.sample(sa);
                let xb = q2.sample(sb);
                a.step(xa, sa);
                b.step(xb, sb);
                equal.push(xa == xb);
                traj_a.record(&a, xa);
                traj_b.record(&b, xb);
            }
        }
    }
    finish(&mut traj_a, a, seed);
    finish(&mut traj_b, b, seed);
    let split_time = match split {
        Some((z, _, _)) => CensoredTime::At(z),
        None => CensoredTime::Censored { horizon },
    };
    Ok(CoupledPair {
        traj_a,
        traj_b,
        split_time,
        equal,
    })
}

fn finish(traj: &mut Trajectory, state: SimState, seed: u64) {
    traj.finish(state, Retention::Auto);
    traj.seed = Some(seed);
}
