//! The tree builder random walk: attach `ξ_n` leaves at the walker, then jump to a
//! uniformly chosen neighbor.

use alloc::format;
use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::schedule::{ConvergingRealization, LeafSampler, LeafSchedule};
use crate::tree::{NodeId, RootedTree};

/// Snapshots of the final tree are dropped above this many nodes unless requested.
pub const AUTO_RETAIN_LIMIT: usize = 1_000_000;

/// Starting configuration `(T_0, x_0)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialTree {
    /// `({o, x}, x)`.
    #[default]
    Edge,
    /// `parents[i]` is the father of vertex `i`; exactly one `None` marks the root.
    Explicit {
        parents: Vec<Option<usize>>,
        walker: usize,
    },
}

impl InitialTree {
    /// The path `o - v1 - ... - v_len` with the walker at its tip.
    pub fn path(len: usize) -> Self {
        let parents = (0..=len).map(|i| i.checked_sub(1)).collect();
        InitialTree::Explicit {
            parents,
            walker: len,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimState {
    pub tree: RootedTree,
    pub position: NodeId,
    pub step: u64,
}

pub fn make_initial(initial: &InitialTree) -> Result<SimState> {
    match initial {
        InitialTree::Edge => Ok(SimState {
            tree: RootedTree::edge(),
            position: NodeId(1),
            step: 0,
        }),
        InitialTree::Explicit { parents, walker } => {
            let tree = RootedTree::from_parents(parents)?;
            if *walker >= tree.len() {
                return Err(Error::WalkerNotInTree(*walker));
            }
            Ok(SimState {
                tree,
                position: NodeId(*walker as u32),
                step: 0,
            })
        }
    }
}

impl SimState {
    #[inline]
    pub fn depth(&self) -> u32 {
        self.tree.depth(self.position)
    }

    /// `deg_{T_n}(X_n) = 1`.
    #[inline]
    pub fn at_leaf(&self) -> bool {
        self.tree.degree(self.position) == 1
    }

    /// Attach `xi` leaves at the current vertex, then jump to a uniform neighbor.
    /// Returns the new position. A lone vertex with no leaves added stays put.
    pub fn step<R: Rng + ?Sized>(&mut self, xi: u32, rng: &mut R) -> NodeId {
        self.attach_leaves(xi);
        let degree = self.tree.degree(self.position);
        if degree > 0 {
            let k = rng.random_range(0..degree);
            self.position = self.tree.neighbor(self.position, k);
        }
        self.position
    }

    /// Attach `xi` leaves at the current vertex (first half of a step).
    pub fn attach_leaves(&mut self, xi: u32) {
        self.step += 1;
        for _ in 0..xi {
            self.tree.add_leaf(self.position, self.step);
        }
    }

    /// Move to the `k`-th neighbor (second half of a step).
    pub fn jump_to_neighbor(&mut self, k: usize) -> NodeId {
        self.position = self.tree.neighbor(self.position, k);
        self.position
    }
}

/// Whether [`run`] keeps the final tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Retention {
    /// Keep it unless it has more than [`AUTO_RETAIN_LIMIT`] nodes.
    #[default]
    Auto,
    Always,
    Never,
}

/// Per-step record of one run, indexed by `n = 0..=horizon`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    positions: Vec<NodeId>,
    depths: Vec<u32>,
    xi: Vec<u32>,
    leaf_at_arrival: Vec<bool>,
    initial_tree_size: usize,
    final_node_count: usize,
    final_tree: Option<RootedTree>,
    /// Seed and schedule the run was generated from, when known.
    pub seed: Option<u64>,
    pub schedule: Option<LeafSchedule>,
    pub realization: Option<ConvergingRealization>,
}

impl Trajectory {
    /// Assemble a trajectory from raw arrays. `xi[0]` must be 0 and depths must move by ±1.
    pub fn from_parts(
        positions: Vec<NodeId>,
        depths: Vec<u32>,
        xi: Vec<u32>,
        leaf_at_arrival: Vec<bool>,
        initial_tree_size: usize,
    ) -> Result<Self> {
        let n = positions.len();
        if n == 0 || depths.len() != n || xi.len() != n || leaf_at_arrival.len() != n {
            return Err(Error::InvalidParameter {
                name: "trajectory",
                reason: "arrays must be nonempty and of equal length".into(),
            });
        }
        let final_node_count = initial_tree_size + xi.iter().map(|x| *x as usize).sum::<usize>();
        let traj = Trajectory {
            positions,
            depths,
            xi,
            leaf_at_arrival,
            initial_tree_size,
            final_node_count,
            final_tree: None,
            seed: None,
            schedule: None,
            realization: None,
        };
        traj.check_invariants()?;
        Ok(traj)
    }

    pub(crate) fn with_capacity(horizon: usize, initial: &SimState) -> Self {
        let mut t = Trajectory {
            positions: Vec::with_capacity(horizon + 1),
            depths: Vec::with_capacity(horizon + 1),
            xi: Vec::with_capacity(horizon + 1),
            leaf_at_arrival: Vec::with_capacity(horizon + 1),
            initial_tree_size: initial.tree.len(),
            final_node_count: initial.tree.len(),
            final_tree: None,
            seed: None,
            schedule: None,
            realization: None,
        };
        t.record(initial, 0);
        t
    }

    #[inline]
    pub(crate) fn record(&mut self, state: &SimState, xi: u32) {
        self.positions.push(state.position);
        self.depths.push(state.depth());
        self.xi.push(xi);
        self.leaf_at_arrival.push(state.at_leaf());
    }

    pub(crate) fn finish(&mut self, state: SimState, retention: Retention) {
        self.final_node_count = state.tree.len();
        let keep = match retention {
            Retention::Always => true,
            Retention::Never => false,
            Retention::Auto => state.tree.len() <= AUTO_RETAIN_LIMIT,
        };
        if keep {
            self.final_tree = Some(state.tree);
        }
    }

    /// Number of steps `N` (the arrays hold `N + 1` entries).
    #[inline]
    pub fn horizon(&self) -> usize {
        self.depths.len() - 1
    }

    pub fn positions(&self) -> &[NodeId] {
        &self.positions
    }

    pub fn depths(&self) -> &[u32] {
        &self.depths
    }

    pub fn xi(&self) -> &[u32] {
        &self.xi
    }

    pub fn leaf_at_arrival(&self) -> &[bool] {
        &self.leaf_at_arrival
    }

    pub fn initial_tree_size(&self) -> usize {
        self.initial_tree_size
    }

    /// `|T_N| = |T_0| + Σ ξ_k`.
    pub fn final_node_count(&self) -> usize {
        self.final_node_count
    }

    pub fn final_tree(&self) -> Option<&RootedTree> {
        self.final_tree.as_ref()
    }

    /// Node count after step `n`.
    pub fn node_count_at(&self, n: usize) -> usize {
        self.initial_tree_size + self.xi[..=n].iter().map(|x| *x as usize).sum::<usize>()
    }

    pub fn check_invariants(&self) -> Result<()> {
        if self.xi[0] != 0 {
            return Err(Error::MalformedTree("xi[0] must be 0".into()));
        }
        for (n, w) in self.depths.windows(2).enumerate() {
            if w[0].abs_diff(w[1]) != 1 {
                return Err(Error::MalformedTree(format!(
                    "depth jumps from {} to {} at step {}",
                    w[0],
                    w[1],
                    n + 1
                )));
            }
        }
        if let Some(tree) = &self.final_tree {
            if tree.len() != self.final_node_count {
                return Err(Error::MalformedTree("node count mismatch".into()));
            }
            for (n, pos) in self.positions.iter().enumerate() {
                if tree.depth(*pos) != self.depths[n] {
                    return Err(Error::MalformedTree(format!(
                        "cached depth mismatch at step {n}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Run `horizon` steps from `initial` with a stream seeded from `seed`.
pub fn run(
    initial: &SimState,
    schedule: &LeafSchedule,
    horizon: u64,
    seed: u64,
) -> Result<Trajectory> {
    run_with(initial, schedule, horizon, seed, Retention::Auto)
}

pub fn run_with(
    initial: &SimState,
    schedule: &LeafSchedule,
    horizon: u64,
    seed: u64,
    retention: Retention,
) -> Result<Trajectory> {
    if horizon == 0 {
        return Err(crate::error::invalid("horizon", "must be at least 1"));
    }
    let mut stream = rng::stream(seed);
    let sampler = schedule.instantiate(&mut stream);
    let mut traj = run_sampler(initial.clone(), &sampler, horizon, &mut stream, retention);
    traj.seed = Some(seed);
    traj.schedule = Some(schedule.clone());
    traj.realization = sampler.realization();
    Ok(traj)
}

/// Drive a state forward with an already-instantiated sampler.
pub fn run_sampler<R: Rng + ?Sized>(
    mut state: SimState,
    sampler: &LeafSampler<'_>,
    horizon: u64,
    rng: &mut R,
    retention: Retention,
) -> Trajectory {
    let mut traj = Trajectory::with_capacity(horizon as usize, &state);
    let start = state.step;
    for n in 1..=horizon {
        let xi = sampler.sample(start + n, rng);
        state.step(xi, rng);
        traj.record(&state, xi);
    }
    traj.finish(state, retention);
    traj
}

/// Advance `state` by `steps` steps, returning only the final depth.
pub fn advance<R: Rng + ?Sized>(
    state: &mut SimState,
    sampler: &LeafSampler<'_>,
    steps: u64,
    rng: &mut R,
) {
    for _ in 0..steps {
        let xi = sampler.sample(state.step + 1, rng);
        state.step(xi, rng);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::LeafLaw;
    use alloc::vec;

    #[test]
    fn canonical_edge() {
        let s = make_initial(&InitialTree::Edge).unwrap();
        assert_eq!(s.tree.len(), 2);
        assert_eq!(s.depth(), 1);
        assert!(s.at_leaf());
    }

    #[test]
    fn single_vertex_and_path() {
        let s = make_initial(&InitialTree::Explicit {
            parents: vec![None],
            walker: 0,
        })
        .unwrap();
        assert_eq!(s.depth(), 0);
        let s = make_initial(&InitialTree::path(2)).unwrap();
        assert_eq!(s.depth(), 2);
        assert!(s.at_leaf());
    }

    #[test]
    fn initial_errors() {
        assert_eq!(
            make_initial(&InitialTree::Explicit {
                parents: vec![],
                walker: 0
            }),
            Err(Error::EmptyTree)
        );
        assert_eq!(
            make_initial(&InitialTree::Explicit {
                parents: vec![None, Some(0)],
                walker: 2
            }),
            Err(Error::WalkerNotInTree(2))
        );
    }

    #[test]
    fn forced_jump_without_leaves() {
        let mut s = make_initial(&InitialTree::Edge).unwrap();
        let mut r = rng::stream(0);
        assert_eq!(s.step(0, &mut r), NodeId(0));
        assert_eq!(s.tree.len(), 2);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn two_leaves_give_uniform_three_way_jump() {
        let base = make_initial(&InitialTree::Edge).unwrap();
        let mut r = rng::stream(9);
        let reps = 60_000;
        let mut counts = [0u32; 5];
        for _ in 0..reps {
            let mut s = base.clone();
            let to = s.step(2, &mut r);
            counts[to.index()] += 1;
        }
        assert_eq!(counts[1], 0);
        // Tolerance 4·sqrt(1/(4R)).
        let tol = 4.0 * libm::sqrt(1.0 / (4.0 * f64::from(reps)));
        for k in [0, 2, 3] {
            let f = f64::from(counts[k]) / f64::from(reps);
            assert!((f - 1.0 / 3.0).abs() < tol, "neighbor {k}: {f}");
        }
    }

    #[test]
    fn delta_zero_alternates() {
        let s = make_initial(&InitialTree::Edge).unwrap();
        let t = run(&s, &LeafSchedule::iid(LeafLaw::point_mass(0)), 4, 1).unwrap();
        assert_eq!(t.depths(), &[1, 0, 1, 0, 1]);
        assert_eq!(t.final_node_count(), 2);
    }

    #[test]
    fn run_is_deterministic() {
        let s = make_initial(&InitialTree::Edge).unwrap();
        let sched = LeafSchedule::bernoulli(0.5).unwrap();
        let a = run(&s, &sched, 500, 42).unwrap();
        let b = run(&s, &sched, 500, 42).unwrap();
        assert_eq!(a, b);
        let c = run(&s, &sched, 500, 43).unwrap();
        assert_ne!(a.depths(), c.depths());
    }

    #[test]
    fn zero_horizon_rejected() {
        let s = make_initial(&InitialTree::Edge).unwrap();
        assert!(run(&s, &LeafSchedule::bernoulli(0.5).unwrap(), 0, 1).is_err());
    }

    #[test]
    fn from_parts_rejects_jumps() {
        let p = vec![NodeId(0); 3];
        assert!(
            Trajectory::from_parts(p.clone(), vec![1, 0, 1], vec![0; 3], vec![false; 3], 2).is_ok()
        );
        assert!(
            Trajectory::from_parts(p.clone(), vec![1, 1, 2], vec![0; 3], vec![false; 3], 2)
                .is_err()
        );
        assert!(
            Trajectory::from_parts(p, vec![1, 0, 1], vec![1, 0, 0], vec![false; 3], 2).is_err()
        );
    }
}
