//! Property tests across the engine, detectors and couplings.

use proptest::prelude::*;
use tbrw_core::coupling::{extract_instance, grand_run, monotone_pair_run, tv_coupled_run};
use tbrw_core::stopping::{
    detect_eta, detect_renewals, father_return_times, hitting_time, CensoredTime,
};
use tbrw_core::{
    make_initial, run_with, InitialTree, LeafLaw, LeafSchedule, Retention, Trajectory,
};

fn bernoulli_run(p: f64, horizon: u64, seed: u64) -> Trajectory {
    let start = make_initial(&InitialTree::Edge).unwrap();
    run_with(
        &start,
        &LeafSchedule::Bernoulli { p },
        horizon,
        seed,
        Retention::Always,
    )
    .unwrap()
}

/// Renewal candidates straight from the definition, in O(N²).
fn brute_candidates(t: &Trajectory) -> Vec<u64> {
    let d = t.depths();
    (1..d.len())
        .filter(|&n| {
            t.leaf_at_arrival()[n]
                && d[..n].iter().all(|x| *x < d[n])
                && d[n + 1..].iter().all(|x| *x >= d[n])
        })
        .map(|n| n as u64)
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trajectories_are_consistent(p in 0.0f64..=1.0, horizon in 1u64..2000, seed: u64) {
        let t = bernoulli_run(p, horizon, seed);
        t.check_invariants().unwrap();
        let tree = t.final_tree().unwrap();
        tree.check_invariants().unwrap();
        prop_assert_eq!(tree.len(), t.node_count_at(horizon as usize));
        let last = *t.positions().last().unwrap();
        prop_assert_eq!(tree.depth(last), *t.depths().last().unwrap());
        for w in t.depths().windows(2) {
            prop_assert_eq!(w[0].abs_diff(w[1]), 1);
        }
    }

    #[test]
    fn leaves_grow_only_under_the_walker(p in 0.0f64..=1.0, horizon in 1u64..1500, seed: u64) {
        let t = bernoulli_run(p, horizon, seed);
        let tree = t.final_tree().unwrap();
        let mut born = vec![0u32; horizon as usize + 1];
        for node in tree.nodes().iter().filter(|n| n.birth_step > 0) {
            let n = node.birth_step as usize;
            prop_assert_eq!(node.parent, Some(t.positions()[n - 1]));
            born[n] += 1;
        }
        prop_assert_eq!(&born[1..], &t.xi()[1..]);
    }

    #[test]
    fn detector_matches_definition(p in 0.05f64..=1.0, horizon in 1u64..1500, seed: u64, guard in 0u64..50) {
        let t = bernoulli_run(p, horizon, seed);
        let rec = detect_renewals(&t, guard);
        prop_assert_eq!(&rec.taus, &brute_candidates(&t));
        for (i, &tau) in rec.taus.iter().enumerate() {
            prop_assert_eq!(rec.censored[i], horizon - tau < guard);
            prop_assert_eq!(rec.confirm_margin[i], horizon - tau);
        }
        for b in rec.blocks() {
            prop_assert!(b.delta_tau >= 1 && b.delta_depth >= 1);
        }
    }

    #[test]
    fn renewals_never_revisit_the_father_and_are_eta_times(p in 0.05f64..=1.0, horizon in 1u64..1500, seed: u64) {
        let t = bernoulli_run(p, horizon, seed);
        let tree = t.final_tree().unwrap();
        let etas = detect_eta(&t);
        for (tau, _) in detect_renewals(&t, 0).confirmed() {
            let at = t.positions()[tau as usize];
            let father = tree.parent(at).unwrap();
            prop_assert!(etas.contains(&tau));
            if tau < horizon {
                let back = hitting_time(&t, father, tau + 1).unwrap();
                prop_assert!(back.is_censored(), "renewal at {} revisits its father", tau);
            }
        }
    }

    /// Extending the horizon can only invalidate a candidate through a later drop
    /// below its depth, and never creates an earlier one.
    #[test]
    fn censoring_monotonicity(p in 0.05f64..=1.0, short in 1u64..1500, extra in 1u64..1500, seed: u64, guard in 0u64..40) {
        let long = bernoulli_run(p, short + extra, seed);
        let cut = bernoulli_run(p, short, seed);
        prop_assert_eq!(cut.depths(), &long.depths()[..=short as usize]);
        let before = detect_renewals(&cut, guard);
        let after = detect_renewals(&long, guard);
        for (tau, depth) in before.confirmed() {
            if !after.taus.contains(&tau) {
                let later_min = long.depths()[short as usize + 1..].iter().min().copied().unwrap();
                prop_assert!(later_min < depth, "renewal at {} dropped without a witness", tau);
            }
        }
        for &tau in after.taus.iter().filter(|t| **t <= short) {
            prop_assert!(before.taus.contains(&tau));
        }
    }

    #[test]
    fn grand_invariants_and_extraction(seed: u64, horizon in 1u64..80, p in 0.0f64..=1.0) {
        let run = grand_run(&InitialTree::Edge, horizon, seed, true).unwrap();
        run.final_state.check_invariants().unwrap();
        let t = extract_instance(&run, p).unwrap();
        t.check_invariants().unwrap();
        let low = extract_instance(&run, p * 0.5).unwrap();
        for n in 0..=horizon as usize {
            prop_assert!(low.node_count_at(n) <= t.node_count_at(n));
        }
    }

    #[test]
    fn tv_pairs_agree_until_split(seed: u64, pa in 0.0f64..=1.0, pb in 0.0f64..=1.0) {
        let (a, b) = (LeafLaw::bernoulli(pa).unwrap(), LeafLaw::bernoulli(pb).unwrap());
        let pair = tv_coupled_run(&a, &b, &InitialTree::Edge, 300, seed).unwrap();
        prop_assert!(pair.states_agree_before_split());
        if let CensoredTime::At(z) = pair.split_time {
            prop_assert!(!pair.equal[z as usize]);
            prop_assert!(pair.equal[..z as usize].iter().all(|e| *e));
        }
        if let Some((x, y)) = pair.first_renewals_before_split(20) {
            prop_assert_eq!(x, y);
        }
    }

    #[test]
    fn monotone_pairs_respect_labels(seed: u64, w0 in 0.0f64..1.0, w2 in 0.0f64..1.0, kappa in 0.05f64..=1.0) {
        // Q on {0,1,2} with mass at least kappa on {1,2}.
        let pos = kappa.max(1.0 - w0);
        let law = LeafLaw::new(vec![0, 1, 2], vec![1.0 - pos, pos * (1.0 - w2), pos * w2]).unwrap();
        let pair = monotone_pair_run(&law, kappa.min(law.kappa()), &InitialTree::path(3), 400, seed).unwrap();
        prop_assert!(pair.visibility_respected());
        prop_assert!(pair.domination_holds());
        pair.q.check_invariants().unwrap();
        pair.kappa.check_invariants().unwrap();
    }
}

#[test]
fn father_returns_never_straddle_a_renewal() {
    for seed in 0..100 {
        let t = bernoulli_run(0.9, 2000, seed);
        let rec = detect_renewals(&t, 0);
        let etas = detect_eta(&t);
        for (eta, back) in etas.iter().zip(father_return_times(&t)) {
            if let CensoredTime::At(h) = back {
                let d = t.depths()[*eta as usize];
                let bad = rec
                    .confirmed()
                    .any(|(tau, depth)| tau > *eta && tau <= h && depth <= d);
                assert!(!bad, "seed {seed}: renewal inside ({eta}, {h}]");
            }
        }
    }
}

#[test]
fn extremes_of_the_grand_coupling() {
    let run = grand_run(&InitialTree::Edge, 200, 5, true).unwrap();
    let zero = extract_instance(&run, 0.0).unwrap();
    for (n, d) in zero.depths().iter().enumerate() {
        assert_eq!(*d, if n % 2 == 0 { 1 } else { 0 });
    }
    let one = extract_instance(&run, 1.0).unwrap();
    for n in 0..=200 {
        assert_eq!(one.node_count_at(n), 2 + n);
    }
}

#[test]
fn detector_time_is_linear() {
    let time = |n: u64| {
        let t = bernoulli_run(0.5, n, 1);
        (0..3)
            .map(|_| {
                let s = std::time::Instant::now();
                std::hint::black_box(detect_renewals(&t, 0));
                s.elapsed().as_secs_f64()
            })
            .fold(f64::INFINITY, f64::min)
    };
    let (small, large) = (time(100_000), time(1_000_000));
    // Linear scaling gives a ratio near 10; quadratic would give 100.
    assert!(large / small < 35.0, "ratio {}", large / small);
}
