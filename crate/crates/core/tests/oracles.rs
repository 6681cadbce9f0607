//! Exact small-case oracles checked against the engine.

use tbrw_core::estimators::speed_trajectory;
use tbrw_core::stopping::{detect_eta, detect_renewals};
use tbrw_core::{make_initial, run, run_with, InitialTree, LeafLaw, LeafSchedule, Retention};

fn gcd(a: u128, b: u128) -> u128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Reduced fraction `num / den`.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Frac(u128, u128);

impl Frac {
    fn add(self, o: Frac) -> Frac {
        let (n, d) = (self.0 * o.1 + o.0 * self.1, self.1 * o.1);
        let g = gcd(n, d);
        Frac(n / g, d / g)
    }
    fn value(self) -> f64 {
        self.0 as f64 / self.1 as f64
    }
}

/// Exhaustive law of `D_n` for point mass `m` from the edge, enumerating every
/// jump outcome on a hand-rolled adjacency list.
fn enumerate_depths(m: usize, steps: usize) -> Vec<(u32, Frac)> {
    #[derive(Clone)]
    struct Walk {
        adj: Vec<Vec<usize>>,
        depth: Vec<u32>,
        at: usize,
    }
    fn go(mut w: Walk, m: usize, left: usize, den: u128, out: &mut Vec<(u32, Frac)>) {
        if left == 0 {
            let d = w.depth[w.at];
            let f = Frac(1, den);
            match out.iter_mut().find(|e| e.0 == d) {
                Some(e) => e.1 = e.1.add(f),
                None => out.push((d, f)),
            }
            return;
        }
        for _ in 0..m {
            let id = w.adj.len();
            w.adj.push(vec![w.at]);
            w.depth.push(w.depth[w.at] + 1);
            w.adj[w.at].push(id);
        }
        let nbrs = w.adj[w.at].clone();
        for next in nbrs.iter().copied() {
            let mut branch = w.clone();
            branch.at = next;
            go(branch, m, left - 1, den * nbrs.len() as u128, out);
        }
    }
    let mut out = Vec::new();
    go(
        Walk {
            adj: vec![vec![1], vec![0]],
            depth: vec![0, 1],
            at: 1,
        },
        m,
        steps,
        1,
        &mut out,
    );
    out.sort_by_key(|e| e.0);
    out
}

#[test]
fn enumeration_oracle_two_steps() {
    let law = enumerate_depths(1, 2);
    assert_eq!(law, vec![(1, Frac(3, 4)), (3, Frac(1, 4))]);
}

#[test]
fn engine_matches_enumeration_for_three_steps() {
    let law = enumerate_depths(1, 3);
    let start = make_initial(&InitialTree::Edge).unwrap();
    let schedule = LeafSchedule::iid(LeafLaw::point_mass(1));
    let reps = 40_000;
    let mut counts = [0usize; 8];
    for r in 0..reps {
        let t = run(&start, &schedule, 3, r as u64).unwrap();
        counts[t.depths()[3] as usize] += 1;
    }
    let total = law.iter().fold(Frac(0, 1), |acc, e| acc.add(e.1));
    assert_eq!(total, Frac(1, 1));
    for (d, f) in law {
        let p = f.value();
        let se = (p * (1.0 - p) / reps as f64).sqrt();
        let hat = counts[d as usize] as f64 / reps as f64;
        assert!((hat - p).abs() <= 4.0 * se + 1e-12, "d={d}: {hat} vs {p}");
    }
}

#[test]
fn delta_zero_is_exact() {
    let start = make_initial(&InitialTree::Edge).unwrap();
    let schedule = LeafSchedule::iid(LeafLaw::point_mass(0));
    let t = run(&start, &schedule, 1001, 3).unwrap();
    for (n, d) in t.depths().iter().enumerate() {
        assert_eq!(*d, if n % 2 == 0 { 1 } else { 0 });
    }
    assert!(speed_trajectory(&t, None).value <= 1.0 / 1000.0);
    assert!(detect_renewals(&t, 0).taus.is_empty());
    assert!(detect_eta(&t).is_empty());
    assert_eq!(t.final_node_count(), 2);
}

#[test]
fn point_mass_one_from_a_path_grows_every_step() {
    let start = make_initial(&InitialTree::path(4)).unwrap();
    let schedule = LeafSchedule::iid(LeafLaw::point_mass(1));
    let t = run_with(&start, &schedule, 500, 11, Retention::Always).unwrap();
    for n in 0..=500 {
        assert_eq!(t.node_count_at(n), 5 + n);
    }
    assert_eq!(t.final_tree().unwrap().len(), 505);
}
