//! Monotone coupling of a `Q`-walk with the Bernoulli(κ)-walk for `Q ∈ Q_κ`.
//!
//! Both walks live on one arena whose vertices are visible to `Q`, to κ, or to
//! both. Whenever the `Q`-walker stands on a shared vertex the κ-walker stands
//! there too. The first `Q`-step from a shared vertex is the offer: a uniform
//! `U` is drawn, `ξ ~ μ = Q(·|ξ ≥ 1)` if `U ≤ κ` (one of the new leaves is then
//! shared), otherwise `ξ ~ ν` with `κμ + (1 − κ)ν = Q`. Later `Q`-steps from
//! that vertex draw from `Q` and add `Q`-only leaves. When the `Q`-walker moves
//! from a shared vertex to a shared vertex the κ-walker takes one step: it gets
//! `1{U ≤ κ}` leaves (the shared leaf) and follows, which is uniform among its
//! neighbors. After the `Q` horizon the κ-walker finishes alone on a fresh stream.

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{make_initial, InitialTree, Trajectory};
use crate::error::{Error, Result};
use crate::rng::{self, Stream};
use crate::schedule::LeafLaw;
use crate::stopping::{hitting_time, CensoredTime};
use crate::tree::{NodeId, RootedTree};

const SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Visibility {
    Q,
    Kappa,
    Both,
}

impl Visibility {
    fn q(self) -> bool {
        self != Visibility::Kappa
    }

    fn kappa(self) -> bool {
        self != Visibility::Q
    }
}

/// One side of the arena: its own dense tree and the arena id of every vertex.
#[derive(Clone, Debug)]
struct Side {
    tree: RootedTree,
    arena: Vec<u32>,
    local: Vec<u32>,
    position: NodeId,
    positions: Vec<NodeId>,
    depths: Vec<u32>,
    xi: Vec<u32>,
    leaf: Vec<bool>,
    arena_positions: Vec<u32>,
}

impl Side {
    fn new(tree: &RootedTree, position: NodeId) -> Self {
        let n = tree.len() as u32;
        let mut side = Side {
            tree: tree.clone(),
            arena: (0..n).collect(),
            local: (0..n).collect(),
            position,
            positions: Vec::new(),
            depths: Vec::new(),
            xi: Vec::new(),
            leaf: Vec::new(),
            arena_positions: Vec::new(),
        };
        side.record(0);
        side
    }

    fn record(&mut self, xi: u32) {
        self.positions.push(self.position);
        self.depths.push(self.tree.depth(self.position));
        self.xi.push(xi);
        self.leaf.push(self.tree.degree(self.position) == 1);
        self.arena_positions.push(self.arena[self.position.index()]);
    }

    fn reveal(&mut self, arena_id: u32, arena_parent: u32, step: u64) {
        let parent = NodeId(self.local[arena_parent as usize]);
        let id = self.tree.add_leaf(parent, step);
        if self.local.len() <= arena_id as usize {
            self.local.resize(arena_id as usize + 1, u32::MAX);
        }
        self.local[arena_id as usize] = id.0;
        self.arena.push(arena_id);
    }

    fn arena_position(&self) -> u32 {
        self.arena[self.position.index()]
    }

    fn random_neighbor(&self, rng: &mut Stream) -> NodeId {
        let degree = self.tree.degree(self.position);
        if degree == 0 {
            self.position
        } else {
            self.tree
                .neighbor(self.position, rng.random_range(0..degree))
        }
    }

    fn into_trajectory(self, seed: u64) -> Result<Trajectory> {
        let size = self.positions.len();
        let initial = self.tree.len() - self.xi.iter().map(|x| *x as usize).sum::<usize>();
        let mut t =
            Trajectory::from_parts(self.positions, self.depths, self.xi, self.leaf, initial)?;
        debug_assert_eq!(t.horizon() + 1, size);
        t.seed = Some(seed);
        Ok(t)
    }
}

#[derive(Clone, Debug)]
pub struct MonotonePair {
    pub q: Trajectory,
    pub kappa: Trajectory,
    pub visibility: Vec<Visibility>,
    /// Arena vertex under each walker at each of its own steps.
    pub q_arena_positions: Vec<u32>,
    pub kappa_arena_positions: Vec<u32>,
    /// κ-clock when the `Q`-walk reached its horizon; later κ-steps are uncoupled.
    pub decoupled_at: u64,
    pub initial_tree_size: usize,
}

impl MonotonePair {
    /// Neither walker ever stands on a vertex hidden from it.
    pub fn visibility_respected(&self) -> bool {
        self.q_arena_positions
            .iter()
            .all(|a| self.visibility[*a as usize].q())
            && self
                .kappa_arena_positions
                .iter()
                .all(|a| self.visibility[*a as usize].kappa())
    }

    /// For every initial vertex `y`: `Q` hits `y` within the horizon only if κ does,
    /// no later on its own clock.
    pub fn domination_holds(&self) -> bool {
        (0..self.initial_tree_size as u32).all(|y| {
            let hq = hitting_time(&self.q, NodeId(y), 0).expect("initial vertex");
            let hk = hitting_time(&self.kappa, NodeId(y), 0).expect("initial vertex");
            match (hq, hk) {
                (CensoredTime::At(a), CensoredTime::At(b)) => b <= a,
                (CensoredTime::At(_), CensoredTime::Censored { .. }) => false,
                _ => true,
            }
        })
    }
}

/// Split `Q` into `μ` (conditioned on `ξ ≥ 1`) and the complementary `ν`.
fn split_law(q: &LeafLaw, kappa: f64) -> Result<(LeafLaw, Option<LeafLaw>)> {
    let mass = q.kappa();
    let positive: Vec<(u32, f64)> = q
        .support()
        .iter()
        .zip(q.probs())
        .map(|(k, p)| (*k, *p))
        .collect();
    let mu = LeafLaw::from_weights(positive.iter().filter(|(k, _)| *k > 0).copied().collect())?;
    let scale = (1.0 - kappa / mass).max(0.0);
    let nu_weights: Vec<(u32, f64)> = positive
        .iter()
        .map(|(k, p)| (*k, if *k == 0 { *p } else { p * scale }))
        .collect();
    let nu = if kappa < 1.0 {
        LeafLaw::from_weights(nu_weights).ok()
    } else {
        None
    };
    Ok((mu, nu))
}

pub fn monotone_pair_run(
    q: &LeafLaw,
    kappa: f64,
    initial: &InitialTree,
    horizon: u64,
    seed: u64,
) -> Result<MonotonePair> {
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(crate::error::invalid("kappa", "must be in (0, 1]"));
    }
    if q.kappa() + SLACK < kappa {
        return Err(Error::NotUniformlyElliptic {
            mass: q.kappa(),
            kappa,
        });
    }
    if horizon == 0 {
        return Err(crate::error::invalid("horizon", "must be at least 1"));
    }
    let (mu, nu) = split_law(q, kappa)?;
    let start = make_initial(initial)?;
    let initial_tree_size = start.tree.len();
    let mut visibility = vec![Visibility::Both; initial_tree_size];
    let mut qs = Side::new(&start.tree, start.position);
    let mut ks = Side::new(&start.tree, start.position);
    let mut stream = rng::stream(seed);
    // κ's pending leaf count from the offer at its current vertex.
    let mut offer: Option<u32> = None;

    for n in 1..=horizon {
        let here = qs.arena_position();
        let shared = visibility[here as usize] == Visibility::Both;
        let (xi, shared_leaf) = if shared && offer.is_none() {
            let hit = stream.random::<f64>() <= kappa;
            offer = Some(u32::from(hit));
            match (&nu, hit) {
                (_, true) | (None, _) => (mu.sample(&mut stream), true),
                (Some(nu), false) => (nu.sample(&mut stream), false),
            }
        } else {
            (q.sample(&mut stream), false)
        };
        for i in 0..xi {
            let id = visibility.len() as u32;
            let vis = if shared_leaf && i == 0 {
                Visibility::Both
            } else {
                Visibility::Q
            };
            visibility.push(vis);
            qs.reveal(id, here, n);
            if vis == Visibility::Both {
                ks.reveal(id, here, ks.positions.len() as u64);
            }
        }
        let to = qs.random_neighbor(&mut stream);
        qs.position = to;
        qs.record(xi);
        let there = qs.arena_position();
        if shared && visibility[there as usize] == Visibility::Both {
            ks.position = NodeId(ks.local[there as usize]);
            ks.record(offer.take().unwrap_or(0));
        }
    }

    let decoupled_at = (ks.positions.len() - 1) as u64;
    let mut solo = rng::split(&mut stream);
    while (ks.positions.len() as u64) <= horizon {
        let step = ks.positions.len() as u64;
        let xi = match offer.take() {
            Some(x) => x,
            None => {
                let x = u32::from(solo.random::<f64>() < kappa);
                let here = ks.arena_position();
                for _ in 0..x {
                    let id = visibility.len() as u32;
                    visibility.push(Visibility::Kappa);
                    ks.reveal(id, here, step);
                }
                x
            }
        };
        ks.position = ks.random_neighbor(&mut solo);
        ks.record(xi);
    }

    let q_arena_positions = qs.arena_positions.clone();
    let kappa_arena_positions = ks.arena_positions.clone();
    Ok(MonotonePair {
        q: qs.into_trajectory(seed)?,
        kappa: ks.into_trajectory(seed)?,
        visibility,
        q_arena_positions,
        kappa_arena_positions,
        decoupled_at,
        initial_tree_size,
    })
}
