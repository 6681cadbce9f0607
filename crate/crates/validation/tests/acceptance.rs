//! Acceptance suite: fifteen criteria at their stated sizes and tolerances.
//! Prints one line per criterion and exits nonzero if any fails.
//!
//! `cargo test -p tbrw-validation --test acceptance -- 3 7` runs a subset.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use tbrw::experiments::{
    clt::CltSummary, counterexample::CounterexampleSummary, degree::DegreeSummary,
    grand::GrandSummary, lil::LilSummary, renewal::RenewalSummary, simulate::SimulateSummary,
    speed::SpeedCurveSummary, tail::TailSummary, tv::TvSummary,
};
use tbrw::{run_experiment, ExperimentConfig, Outcome, Overrides};
use tbrw_core::rng::replica_seed;
use tbrw_core::{make_initial, run_with, InitialTree, LeafLaw, LeafSchedule, Retention};

type Check = Result<String, String>;

fn presets() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../presets")
}

fn out_root() -> PathBuf {
    Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance")
}

fn preset(name: &str) -> ExperimentConfig {
    let overrides = Overrides {
        out: Some(out_root().join(name)),
        ..Default::default()
    };
    ExperimentConfig::from_file(&presets().join(format!("{name}.json")), &overrides)
        .unwrap_or_else(|e| panic!("preset {name}: {e}"))
}

fn execute(cfg: &ExperimentConfig) -> Result<Outcome, String> {
    run_experiment(cfg).map_err(|e| e.to_string())
}

fn summary<T: serde::de::DeserializeOwned>(o: &Outcome) -> Result<T, String> {
    o.summary_as().map_err(|e| e.to_string())
}

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// 1. Point mass at zero from the edge.
fn delta_zero() -> Check {
    let cfg = preset("delta0");
    let o = execute(&cfg)?;
    let s: SimulateSummary = summary(&o)?;
    for r in 0..cfg.replicas {
        let path = cfg.out_dir().join(format!("trajectory_{r}.csv"));
        let mut reader = csv::Reader::from_path(&path).map_err(|e| e.to_string())?;
        for (n, row) in reader.records().enumerate() {
            let row = row.map_err(|e| e.to_string())?;
            let depth: u32 = row[2].parse().map_err(|_| "bad depth".to_string())?;
            if depth != if n % 2 == 0 { 1 } else { 0 } {
                return Err(format!("replica {r}: depth {depth} at step {n}"));
            }
        }
    }
    let max_speed = s.replicas.iter().map(|r| r.speed).fold(0.0, f64::max);
    let renewals: usize = s
        .replicas
        .iter()
        .map(|r| r.renewals_confirmed + r.renewals_censored)
        .sum();
    ensure(
        max_speed <= 1.0 / cfg.horizon as f64 && renewals == 0,
        format!("depth alternates exactly; max v_hat {max_speed:.1e}; renewals {renewals}"),
    )
}

/// Law of `D_n` for point mass `m` from the edge by enumerating every jump, as
/// `(depth, probability)`. Branch weights are products of `1/deg` with small
/// degrees, exact in binary for the two-step case.
fn enumerate(m: usize, steps: usize) -> Vec<(u32, f64)> {
    fn go(
        adj: Vec<Vec<usize>>,
        depth: Vec<u32>,
        at: usize,
        m: usize,
        left: usize,
        w: f64,
        out: &mut Vec<(u32, f64)>,
    ) {
        if left == 0 {
            match out.iter_mut().find(|e| e.0 == depth[at]) {
                Some(e) => e.1 += w,
                None => out.push((depth[at], w)),
            }
            return;
        }
        let (mut adj, mut depth) = (adj, depth);
        for _ in 0..m {
            let id = adj.len();
            adj.push(vec![at]);
            depth.push(depth[at] + 1);
            adj[at].push(id);
        }
        let nbrs = adj[at].clone();
        for &next in &nbrs {
            go(
                adj.clone(),
                depth.clone(),
                next,
                m,
                left - 1,
                w / nbrs.len() as f64,
                out,
            );
        }
    }
    let mut out = Vec::new();
    go(
        vec![vec![1], vec![0]],
        vec![0, 1],
        1,
        m,
        steps,
        1.0,
        &mut out,
    );
    out.sort_by_key(|a| a.0);
    out
}

// 2. Two steps of point mass one against the enumeration.
fn two_step_oracle() -> Check {
    let law = enumerate(1, 2);
    if law != [(1, 0.75), (3, 0.25)] {
        return Err(format!("enumeration gave {law:?}"));
    }
    let start = make_initial(&InitialTree::Edge).map_err(|e| e.to_string())?;
    let schedule = LeafSchedule::iid(LeafLaw::point_mass(1));
    let reps = 100_000;
    let mut counts = [0usize; 4];
    for r in 0..reps {
        let t = run_with(
            &start,
            &schedule,
            2,
            replica_seed(1, r, "two-step-oracle"),
            Retention::Never,
        )
        .map_err(|e| e.to_string())?;
        counts[t.depths()[2] as usize] += 1;
    }
    let mut detail = Vec::new();
    let mut ok = true;
    for (d, p) in law {
        let hat = counts[d as usize] as f64 / reps as f64;
        let se = (p * (1.0 - p) / reps as f64).sqrt();
        ok &= (hat - p).abs() <= 3.0 * se;
        detail.push(format!("P(D2={d}) {hat:.4} vs {p} (±{:.4})", 3.0 * se));
    }
    ensure(ok, detail.join("; "))
}

// 3. Degree fractions under n^-0.75 leaf probabilities.
fn degree_law() -> Check {
    let o = execute(&preset("degree"))?;
    let s: DegreeSummary = summary(&o)?;
    let h = &s.histogram;
    let checks = [
        (1, 2.0 / 3.0, 0.02),
        (2, 1.0 / 6.0, 0.02),
        (3, 1.0 / 15.0, 0.015),
    ];
    let ok = checks
        .iter()
        .all(|(d, t, tol)| (h.fraction(*d) - t).abs() <= *tol);
    let detail = checks
        .iter()
        .map(|(d, t, tol)| format!("d={d}: {:.4} vs {t:.4}±{tol}", h.fraction(*d)))
        .collect::<Vec<_>>()
        .join("; ");
    ensure(ok, format!("{} nodes; {detail}", h.nodes))
}

// 4. Trajectory vs renewal-ratio speed.
fn slln_cross() -> Check {
    let s: RenewalSummary = summary(&execute(&preset("renewal"))?)?;
    ensure(
        s.speed_gap.abs() <= 2.0 * s.combined_stderr,
        format!(
            "trajectory {:.5} vs renewal {:.5}; gap {:.5} vs 2 SE {:.5}",
            s.speed_trajectory.mean,
            s.speed_renewal.mean,
            s.speed_gap,
            2.0 * s.combined_stderr
        ),
    )
}

// 5. Stretched-exponential tail of the first renewal time.
fn tail_shape() -> Check {
    let s: TailSummary = summary(&execute(&preset("tail"))?)?;
    let fit = s.fit.ok_or("no fit")?;
    ensure(
        fit.r_squared >= 0.95 && fit.rate > 0.0,
        format!(
            "R² {:.4}, c {:.4} over {} points; {} observed, {} censored",
            fit.r_squared, fit.rate, fit.points, s.observed, s.censored
        ),
    )
}

// 6. Standardized D_N against N(0, 1).
fn clt() -> Check {
    let s: CltSummary = summary(&execute(&preset("clt"))?)?;
    ensure(
        s.ks_stat < 0.10,
        format!(
            "KS {:.4} (p {:.3}); v_hat {:.5}, sigma {:.4} ({:?})",
            s.ks_stat,
            s.ks_pvalue,
            s.normalization.v_hat,
            s.normalization.sigma.sigma,
            s.normalization.sigma.chosen
        ),
    )
}

// 7. LIL envelope.
fn lil() -> Check {
    let s: LilSummary = summary(&execute(&preset("lil"))?)?;
    let (lo, hi) = s
        .maxima
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), m| (a.min(*m), b.max(*m)));
    ensure(
        s.fraction_in_band >= 0.90,
        format!(
            "{:.0}% in [{}, {}]; range {lo:.3}..{hi:.3}",
            100.0 * s.fraction_in_band,
            s.band[0],
            s.band[1]
        ),
    )
}

// 8. Independence of renewal blocks.
fn renewal_independence() -> Check {
    let s: RenewalSummary = summary(&execute(&preset("renewal"))?)?;
    let p = s.ks_halves_pvalue.ok_or("no blocks")?;
    ensure(
        s.lag1.abs() <= s.lag1_halfwidth && p >= 0.05,
        format!(
            "lag-1 {:.4} (band ±{:.4}, {} pairs); halves KS {:.4}, p {:.3}; {} blocks",
            s.lag1,
            s.lag1_halfwidth,
            s.lag1_pairs,
            s.ks_halves.unwrap_or(f64::NAN),
            p,
            s.blocks
        ),
    )
}

// 9-11 share one batch of grand runs.
fn grand_invariants(s: &GrandSummary) -> Check {
    let bad =
        s.invariant_failures + s.monotone_failures + s.full_growth_failures + s.formula_failures;
    ensure(
        bad == 0,
        format!(
            "{} runs x {} steps: invariant {} / monotone {} / V(1) {} / count formula {} failures",
            s.runs,
            s.horizon,
            s.invariant_failures,
            s.monotone_failures,
            s.full_growth_failures,
            s.formula_failures
        ),
    )
}

fn grand_marginal(s: &GrandSummary) -> Check {
    ensure(
        s.marginal_pvalue >= 0.01,
        format!(
            "D_{} at p={}: KS {:.4}, p {:.3} ({} vs {} runs)",
            s.marginal_step,
            s.marginal_p,
            s.marginal_ks,
            s.marginal_pvalue,
            s.marginal_runs,
            s.marginal_runs
        ),
    )
}

fn coalescence(s: &GrandSummary) -> Check {
    let within = (s.sufficient_freq - s.coalescence_target).abs() <= 3.0 * s.sufficient_se;
    let batches_ok = s.batches.iter().all(|b| b.agree_freq >= b.sufficient_freq);
    ensure(
        within && batches_ok && s.inclusion_violations == 0,
        format!(
            "sufficient {:.4} vs {:.4} (±{:.4}); agree {:.4}; agree ≥ sufficient in {}/{} batches",
            s.sufficient_freq,
            s.coalescence_target,
            3.0 * s.sufficient_se,
            s.agree_freq,
            s.batches
                .iter()
                .filter(|b| b.agree_freq >= b.sufficient_freq)
                .count(),
            s.batches.len()
        ),
    )
}

// 12. Maximal coupling of Ber(0.5) and Ber(0.7).
fn tv_coupling() -> Check {
    let cfg = preset("tv");
    let (a, b) = (&cfg.coupling_tv.law_a, &cfg.coupling_tv.law_b);
    let mut support: Vec<u32> = a.support().iter().chain(b.support()).copied().collect();
    support.sort();
    support.dedup();
    let oracle = 0.5
        * support
            .iter()
            .map(|k| (a.prob(*k) - b.prob(*k)).abs())
            .sum::<f64>();
    if (oracle - 0.2).abs() > 1e-12 {
        return Err(format!("formula oracle gives {oracle}"));
    }
    let s: TvSummary = summary(&execute(&cfg)?)?;
    let target = 1.0 / oracle;
    ensure(
        (s.d_tv - oracle).abs() < 1e-12
            && (s.zeta.mean - target).abs() <= 0.05 * target
            && s.censored == 0
            && s.pre_split_failures == 0
            && s.tau1_mismatches == 0,
        format!(
            "d_TV {:.3}; mean ζ {:.3} (target {target}); pre-ζ mismatches {}; τ₁ equal in {}/{} pairs",
            s.d_tv,
            s.zeta.mean,
            s.pre_split_failures,
            s.tau1_compared - s.tau1_mismatches,
            s.tau1_compared
        ),
    )
}

// 13. Speed curve preset.
fn speed_curve() -> Check {
    let cfg = preset("fig7_speed_curve");
    let s: SpeedCurveSummary = summary(&execute(&cfg)?)?;
    let rows = std::fs::read_to_string(cfg.out_dir().join("speed_curve.csv"))
        .map_err(|e| e.to_string())?;
    let curve = s
        .rows
        .iter()
        .map(|r| format!("{:.3}", r.v_hat))
        .collect::<Vec<_>>()
        .join(" ");
    ensure(
        s.bound_violations.is_empty()
            && s.end_to_end_z >= 5.0
            && rows.lines().count() == s.rows.len() + 1,
        format!(
            "v_hat(p) = [{curve}]; end-to-end {:.1} SE; bound violations {:?}",
            s.end_to_end_z, s.bound_violations
        ),
    )
}

// 14. Alternating schedule.
fn counterexample() -> Check {
    let s: CounterexampleSummary = summary(&execute(&preset("counterexample"))?)?;
    let means = s
        .speeds
        .iter()
        .map(|c| format!("{:.3}", c.mean))
        .collect::<Vec<_>>()
        .join(" ");
    let gaps = s
        .gaps
        .iter()
        .map(|g| format!("{g:+.3}"))
        .collect::<Vec<_>>()
        .join(" ");
    ensure(
        s.oscillates,
        format!(
            "k = {:?}; D_k/k = [{means}]; gaps [{gaps}] vs {:.3}",
            s.checkpoints, s.half_gap
        ),
    )
}

// 15. Converging schedule against point-mass references.
fn converging() -> Check {
    let cfg = preset("converging");
    let s: SimulateSummary = summary(&execute(&cfg)?)?;
    let mut refs = Vec::new();
    for k in [1u32, 2] {
        let mut c = cfg.clone();
        c.schedule = Some(LeafSchedule::iid(LeafLaw::point_mass(k)));
        c.out = Some(out_root().join(format!("converging-ref-{k}")));
        let r: SimulateSummary = summary(&execute(&c)?)?;
        let speeds: Vec<f64> = r.replicas.iter().map(|x| x.speed).collect();
        refs.push((
            tbrw_core::stats::mean(&speeds),
            tbrw_core::stats::std_error(&speeds),
        ));
    }
    let mut misses = Vec::new();
    let mut seen = [0usize; 2];
    for r in &s.replicas {
        let k = r.realization.ok_or("no realization")?.limit;
        let (v, se) = refs[k as usize - 1];
        seen[k as usize - 1] += 1;
        let tol = 3.0 * r.speed_stderr.hypot(se);
        if (r.speed - v).abs() > tol {
            misses.push(format!(
                "replica {} (k={k}): {:.4} vs {v:.4} ± {tol:.4}",
                r.replica, r.speed
            ));
        }
    }
    ensure(
        misses.is_empty(),
        format!(
            "v(1) {:.4}, v(2) {:.4}; limits 1/2 drawn {}/{}; {}",
            refs[0].0,
            refs[1].0,
            seen[0],
            seen[1],
            if misses.is_empty() {
                "all replicas within 3 SE".to_string()
            } else {
                misses.join("; ")
            }
        ),
    )
}

struct Criterion {
    id: usize,
    name: &'static str,
    limit: Duration,
}

fn main() {
    let wanted: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let want = |id: usize| wanted.is_empty() || wanted.contains(&id);
    let secs = Duration::from_secs;
    let criteria = [
        Criterion {
            id: 1,
            name: "delta-zero exactness",
            limit: secs(1),
        },
        Criterion {
            id: 2,
            name: "two-step enumeration oracle",
            limit: secs(10),
        },
        Criterion {
            id: 3,
            name: "degree law",
            limit: secs(60),
        },
        Criterion {
            id: 4,
            name: "SLLN cross-estimator",
            limit: secs(120),
        },
        Criterion {
            id: 5,
            name: "tail shape",
            limit: secs(120),
        },
        Criterion {
            id: 6,
            name: "CLT",
            limit: secs(300),
        },
        Criterion {
            id: 7,
            name: "LIL envelope",
            limit: secs(600),
        },
        Criterion {
            id: 8,
            name: "renewal independence",
            limit: secs(120),
        },
        Criterion {
            id: 9,
            name: "grand coupling invariants",
            limit: secs(120),
        },
        Criterion {
            id: 10,
            name: "grand coupling marginal",
            limit: secs(120),
        },
        Criterion {
            id: 11,
            name: "coalescence bound",
            limit: secs(60),
        },
        Criterion {
            id: 12,
            name: "TV coupling",
            limit: secs(60),
        },
        Criterion {
            id: 13,
            name: "speed bound and curve",
            limit: secs(1800),
        },
        Criterion {
            id: 14,
            name: "counter-example oscillation",
            limit: secs(900),
        },
        Criterion {
            id: 15,
            name: "converging schedule limit",
            limit: secs(600),
        },
    ];

    // The grand batch feeds 9-11; each is charged the batch's full time.
    let grand = if (9..=11).any(want) {
        let started = Instant::now();
        let s = execute(&preset("grand")).and_then(|o| summary::<GrandSummary>(&o));
        Some((s, started.elapsed()))
    } else {
        None
    };

    let mut failed = 0;
    for c in criteria.iter().filter(|c| want(c.id)) {
        let started = Instant::now();
        let (result, elapsed) = match c.id {
            9..=11 => {
                let (s, t) = grand.as_ref().expect("grand batch ran");
                let r = s.as_ref().map_err(|e| e.clone()).and_then(|s| match c.id {
                    9 => grand_invariants(s),
                    10 => grand_marginal(s),
                    _ => coalescence(s),
                });
                (r, *t)
            }
            id => {
                let r = match id {
                    1 => delta_zero(),
                    2 => two_step_oracle(),
                    3 => degree_law(),
                    4 => slln_cross(),
                    5 => tail_shape(),
                    6 => clt(),
                    7 => lil(),
                    8 => renewal_independence(),
                    12 => tv_coupling(),
                    13 => speed_curve(),
                    14 => counterexample(),
                    _ => converging(),
                };
                (r, started.elapsed())
            }
        };
        let in_time = elapsed <= c.limit;
        let pass = result.is_ok() && in_time;
        failed += usize::from(!pass);
        let detail = match &result {
            Ok(d) | Err(d) => d,
        };
        let timing = format!("{:.2} s / {} s", elapsed.as_secs_f64(), c.limit.as_secs());
        let timing = if in_time {
            timing
        } else {
            format!("{timing} OVER LIMIT")
        };
        println!(
            "[{}] {:>2} {:<28} {timing:<22} {detail}",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.name
        );
    }
    println!("acceptance: {failed} failing criteria");
    if failed > 0 {
        std::process::exit(1);
    }
}
