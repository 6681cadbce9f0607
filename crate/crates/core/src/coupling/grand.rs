//! Grand coupling of the Bernoulli(p) walks for every `p ∈ [0, 1]` at once.
//!
//! Balls carry subinterval labels that tile `[0, 1]`; vertices carry finite unions
//! of intervals. Each step samples `U`, attaches at every occupied vertex `v` a
//! child labeled `[U, 1] ∩ (labels of the balls on v)`, splits the ball holding
//! `U` at `U`, and moves every ball to a uniform neighbor whose label contains
//! the ball's label. The `p`-instance is the ball containing `p` on the vertices
//! whose labels contain `p`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::interval::{cmp_real, Interval, IntervalSet, Token};
use crate::engine::{make_initial, InitialTree, SimState, Trajectory};
use crate::error::{Error, Result};
use crate::rng;
use crate::tree::{NodeId, RootedTree};

const UNPLACED: u32 = u32::MAX;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ball {
    pub label: Interval,
    pub position: NodeId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewNode {
    pub node: NodeId,
    pub parent: NodeId,
    pub label: IntervalSet,
}

/// Everything that happened in one step; enough to replay any instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrandEvent {
    pub step: u64,
    pub u: Token,
    /// `(old ball, new ball)`: the old id keeps `[a, U]`, the new one gets `[U, b]`.
    pub split: (u32, u32),
    /// Sorted by parent.
    pub new_nodes: Vec<NewNode>,
    /// `(ball, from, to)` for every ball, in id order.
    pub ball_moves: Vec<(u32, NodeId, NodeId)>,
}

#[derive(Clone, Debug)]
pub struct GrandState {
    pub tree: RootedTree,
    pub labels: Vec<IntervalSet>,
    pub balls: Vec<Ball>,
    pub step: u64,
    pub uniforms: Vec<Token>,
}

impl GrandState {
    /// Every initial vertex labeled `[0, 1]`, one ball `[0, 1]` on the walker.
    pub fn new(initial: &SimState) -> Self {
        GrandState {
            labels: vec![IntervalSet::unit(); initial.tree.len()],
            tree: initial.tree.clone(),
            balls: vec![Ball {
                label: Interval::UNIT,
                position: initial.position,
            }],
            step: 0,
            uniforms: Vec::new(),
        }
    }

    /// Index of the ball whose label contains `p`.
    pub fn ball_containing(&self, p: f64) -> Result<usize> {
        if self
            .uniforms
            .iter()
            .any(|u| cmp_real(p, *u) == Ordering::Equal)
        {
            return Err(Error::UniformCollision(p));
        }
        self.balls
            .iter()
            .position(|b| b.label.contains_real(p))
            .ok_or_else(|| crate::error::invalid("p", format!("{p} is not in [0, 1]")))
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> GrandEvent {
        let u = Token::sample(rng);
        self.step += 1;
        self.uniforms.push(u);

        let mut occupied: Vec<(NodeId, usize)> = self
            .balls
            .iter()
            .enumerate()
            .map(|(i, b)| (b.position, i))
            .collect();
        occupied.sort_unstable();
        let above_u = Interval::new(u, Token::ONE);
        let mut new_nodes = Vec::new();
        let mut i = 0;
        while i < occupied.len() {
            let v = occupied[i].0;
            let mut parts = Vec::new();
            while i < occupied.len() && occupied[i].0 == v {
                parts.push(self.balls[occupied[i].1].label);
                i += 1;
            }
            let label = IntervalSet::from_intervals(parts).intersect_interval(&above_u);
            // Degenerate labels are invisible to every instance.
            if label.parts().iter().all(|iv| iv.lo == iv.hi) {
                continue;
            }
            let node = self.tree.add_leaf(v, self.step);
            self.labels.push(label.clone());
            new_nodes.push(NewNode {
                node,
                parent: v,
                label,
            });
        }

        let holder = self
            .balls
            .iter()
            .position(|b| b.label.contains_strictly(u))
            .expect("ball labels tile [0, 1]");
        let new_id = self.balls.len() as u32;
        let hi = self.balls[holder].label.hi;
        self.balls[holder].label.hi = u;
        let position = self.balls[holder].position;
        self.balls.push(Ball {
            label: Interval::new(u, hi),
            position,
        });

        let mut ball_moves = Vec::with_capacity(self.balls.len());
        let mut eligible = Vec::new();
        for (id, ball) in self.balls.iter_mut().enumerate() {
            let from = ball.position;
            eligible.clear();
            for k in 0..self.tree.degree(from) {
                let w = self.tree.neighbor(from, k);
                if self.labels[w.index()].contains_interval(&ball.label) {
                    eligible.push(w);
                }
            }
            if !eligible.is_empty() {
                ball.position = eligible[rng.random_range(0..eligible.len())];
            }
            ball_moves.push((id as u32, from, ball.position));
        }
        GrandEvent {
            step: self.step,
            u,
            split: (holder as u32, new_id),
            new_nodes,
            ball_moves,
        }
    }

    /// Ball labels tile `[0, 1]` and each sits inside its vertex's label.
    pub fn check_ball_invariants(&self) -> Result<()> {
        let mut labels: Vec<Interval> = self.balls.iter().map(|b| b.label).collect();
        labels.sort_by_key(|iv| iv.lo);
        let tiled = labels.first().map(|iv| iv.lo) == Some(Token::ZERO)
            && labels.last().map(|iv| iv.hi) == Some(Token::ONE)
            && labels.windows(2).all(|w| w[0].hi == w[1].lo)
            && labels.iter().all(|iv| iv.lo < iv.hi);
        if !tiled {
            return Err(Error::MalformedTree(format!(
                "ball labels do not tile [0, 1] at step {}",
                self.step
            )));
        }
        for (i, b) in self.balls.iter().enumerate() {
            if !self.labels[b.position.index()].contains_interval(&b.label) {
                return Err(Error::MalformedTree(format!(
                    "ball {i} label escapes vertex {} at step {}",
                    b.position.0, self.step
                )));
            }
        }
        Ok(())
    }

    /// Ball invariants plus nesting of every vertex label inside its father's.
    pub fn check_invariants(&self) -> Result<()> {
        self.tree.check_invariants()?;
        self.check_ball_invariants()?;
        for (i, node) in self.tree.nodes().iter().enumerate() {
            if let Some(parent) = node.parent {
                let outer = &self.labels[parent.index()];
                if !self.labels[i]
                    .parts()
                    .iter()
                    .all(|iv| outer.contains_interval(iv))
                {
                    return Err(Error::MalformedTree(format!(
                        "label of vertex {i} escapes its father"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Event log of one grand run.
#[derive(Clone, Debug)]
pub struct GrandRun {
    pub initial: SimState,
    pub events: Vec<GrandEvent>,
    pub final_state: GrandState,
    pub seed: u64,
}

impl GrandRun {
    pub fn horizon(&self) -> usize {
        self.events.len()
    }

    pub fn uniforms(&self) -> &[Token] {
        &self.final_state.uniforms
    }
}

/// Run the grand coupling. With `check` set, ball invariants and the nesting of
/// each new label are asserted after every step.
pub fn grand_run(initial: &InitialTree, horizon: u64, seed: u64, check: bool) -> Result<GrandRun> {
    if horizon == 0 {
        return Err(crate::error::invalid("horizon", "must be at least 1"));
    }
    let start = make_initial(initial)?;
    let mut state = GrandState::new(&start);
    let mut stream = rng::stream(seed);
    let mut events = Vec::with_capacity(horizon as usize);
    for _ in 0..horizon {
        let event = state.step(&mut stream);
        if check {
            state.check_ball_invariants()?;
            for nn in &event.new_nodes {
                let outer = &state.labels[nn.parent.index()];
                if !nn
                    .label
                    .parts()
                    .iter()
                    .all(|iv| outer.contains_interval(iv))
                {
                    return Err(Error::MalformedTree(format!(
                        "new vertex {} escapes its father",
                        nn.node.0
                    )));
                }
            }
        }
        events.push(event);
    }
    Ok(GrandRun {
        initial: start,
        events,
        final_state: state,
        seed,
    })
}

/// An extracted instance with the grand vertex behind each of its positions.
#[derive(Clone, Debug)]
pub struct ExtractedPath {
    pub trajectory: Trajectory,
    pub grand_positions: Vec<NodeId>,
}

/// Replay the `p`-instance from the event log.
pub fn extract_path(run: &GrandRun, p: f64) -> Result<ExtractedPath> {
    if !(0.0..=1.0).contains(&p) {
        return Err(crate::error::invalid("p", format!("{p} is not in [0, 1]")));
    }
    if run
        .uniforms()
        .iter()
        .any(|u| cmp_real(p, *u) == Ordering::Equal)
    {
        return Err(Error::UniformCollision(p));
    }
    let horizon = run.events.len();
    let mut state = run.initial.clone();
    let mut dense = vec![UNPLACED; run.final_state.tree.len()];
    for (i, slot) in dense.iter_mut().enumerate().take(state.tree.len()) {
        *slot = i as u32;
    }
    let mut traj = Trajectory::with_capacity(horizon, &state);
    let mut grand_positions = Vec::with_capacity(horizon + 1);
    grand_positions.push(run.initial.position);
    let mut ball = 0usize;
    let mut at = run.initial.position;

    for ev in &run.events {
        let gained = ev
            .new_nodes
            .binary_search_by_key(&at, |nn| nn.parent)
            .ok()
            .map(|i| &ev.new_nodes[i])
            .filter(|nn| nn.label.contains_real(p));
        let xi = u32::from(gained.is_some());
        state.attach_leaves(xi);
        if let Some(nn) = gained {
            dense[nn.node.index()] = state.tree.len() as u32 - 1;
        }
        if ball == ev.split.0 as usize && cmp_real(p, ev.u) == Ordering::Greater {
            ball = ev.split.1 as usize;
        }
        let (_, from, to) = ev.ball_moves[ball];
        debug_assert_eq!(from, at);
        at = to;
        let id = dense[to.index()];
        if id == UNPLACED {
            return Err(Error::MalformedTree(format!(
                "instance {p} moved onto a vertex it cannot see"
            )));
        }
        state.position = NodeId(id);
        traj.record(&state, xi);
        grand_positions.push(at);
    }
    traj.finish(state, crate::engine::Retention::Auto);
    traj.seed = Some(run.seed);
    traj.check_invariants()?;
    Ok(ExtractedPath {
        trajectory: traj,
        grand_positions,
    })
}

/// The Bernoulli(`p`) instance as a plain trajectory.
pub fn extract_instance(run: &GrandRun, p: f64) -> Result<Trajectory> {
    extract_path(run, p).map(|e| e.trajectory)
}

/// `|T_0| + #{k ≤ n : U_k < p}`.
pub fn vertex_count_formula(run: &GrandRun, p: f64, n: usize) -> usize {
    run.initial.tree.len()
        + run.uniforms()[..n]
            .iter()
            .filter(|u| cmp_real(p, **u) == Ordering::Greater)
            .count()
}

/// `V_n^{(p)} ≤ V_n^{(q)}` for each consecutive pair of the sorted grid.
pub fn vertex_count_monotonicity(run: &GrandRun, ps: &[f64], n: usize) -> Result<Vec<bool>> {
    if ps.windows(2).any(|w| w[0] > w[1]) {
        return Err(crate::error::invalid("ps", "must be sorted"));
    }
    if n > run.horizon() {
        return Err(crate::error::invalid("n", "beyond the horizon"));
    }
    let counts = ps
        .iter()
        .map(|p| extract_instance(run, *p).map(|t| t.node_count_at(n)))
        .collect::<Result<Vec<_>>>()?;
    Ok(counts.windows(2).map(|w| w[0] <= w[1]).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoalescenceStats {
    pub runs: usize,
    /// Runs where both instances agree on steps `0..=n`.
    pub agree: usize,
    /// Runs with no `U_k` strictly between `p` and `q` for `k ≤ n`.
    pub sufficient: usize,
    /// Runs where the sufficient event held but the instances disagreed.
    pub inclusion_violations: usize,
    pub agree_freq: f64,
    pub sufficient_freq: f64,
    /// One-sided 95% lower confidence bound on the agreement probability.
    pub agree_lower: f64,
    /// `(1 − |p − q|)^n`.
    pub target: f64,
}

pub fn coalescence_probability(
    runs: &[GrandRun],
    p: f64,
    q: f64,
    n: usize,
) -> Result<CoalescenceStats> {
    if runs.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, have: 0 });
    }
    let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
    let (mut agree, mut sufficient, mut violations) = (0, 0, 0);
    for run in runs {
        if n > run.horizon() {
            return Err(crate::error::invalid("n", "beyond the horizon"));
        }
        let a = extract_path(run, p)?;
        let b = extract_path(run, q)?;
        let same = a.grand_positions[..=n] == b.grand_positions[..=n]
            && a.trajectory.xi()[..=n] == b.trajectory.xi()[..=n];
        let clear = run.uniforms()[..n].iter().all(|u| {
            !(cmp_real(lo, *u) == Ordering::Less && cmp_real(hi, *u) == Ordering::Greater)
        });
        agree += usize::from(same);
        sufficient += usize::from(clear);
        violations += usize::from(clear && !same);
    }
    let m = runs.len() as f64;
    let agree_freq = agree as f64 / m;
    let se = libm::sqrt(agree_freq * (1.0 - agree_freq) / m);
    Ok(CoalescenceStats {
        runs: runs.len(),
        agree,
        sufficient,
        inclusion_violations: violations,
        agree_freq,
        sufficient_freq: sufficient as f64 / m,
        agree_lower: (agree_freq - 1.645 * se).max(0.0),
        target: libm::pow(1.0 - (hi - lo), n as f64),
    })
}
