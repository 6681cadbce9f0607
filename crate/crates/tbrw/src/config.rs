//! JSON experiment configs. A config is one document; command-line flags
//! overwrite its top-level fields before validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tbrw_core::counterexample::PilotConfig;
use tbrw_core::{InitialTree, LeafLaw, LeafSchedule};

use crate::error::{Result, RunError};

pub const EXPERIMENTS: [&str; 11] = [
    "simulate",
    "renewal-stats",
    "speed-curve",
    "degree-dist",
    "tail",
    "clt",
    "lil",
    "coupling-grand",
    "coupling-tv",
    "coupling-monotone",
    "counterexample",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Simulate,
    RenewalStats,
    SpeedCurve,
    DegreeDist,
    Tail,
    Clt,
    Lil,
    CouplingGrand,
    CouplingTv,
    CouplingMonotone,
    Counterexample,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        EXPERIMENTS[self as usize]
    }

    pub fn parse(name: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(name.to_owned())).map_err(|_| {
            RunError::UnknownExperiment {
                name: name.to_owned(),
                valid: EXPERIMENTS.to_vec(),
            }
        })
    }

    /// Leaf schedule used when the config names none.
    pub fn default_schedule(self) -> LeafSchedule {
        match self {
            Experiment::DegreeDist => LeafSchedule::Decaying { gamma: 0.75 },
            _ => LeafSchedule::Bernoulli { p: 0.5 },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub master_seed: u64,
    pub horizon: u64,
    pub replicas: usize,
    #[serde(default)]
    pub schedule: Option<LeafSchedule>,
    #[serde(default)]
    pub initial: InitialTree,
    /// Post-τ steps required to confirm a renewal; defaults to `2N / #candidates`.
    #[serde(default)]
    pub guard: Option<u64>,
    /// Batch count for the batch-means speed error; defaults to `√N`.
    #[serde(default)]
    pub batches: Option<usize>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Worker threads; `None` uses every available core.
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub simulate: SimulateKnobs,
    #[serde(default)]
    pub renewal_stats: RenewalKnobs,
    #[serde(default)]
    pub speed_curve: SpeedCurveKnobs,
    #[serde(default)]
    pub clt: CltKnobs,
    #[serde(default)]
    pub lil: LilKnobs,
    #[serde(default)]
    pub coupling_grand: GrandKnobs,
    #[serde(default)]
    pub coupling_tv: TvKnobs,
    #[serde(default)]
    pub coupling_monotone: MonotoneKnobs,
    #[serde(default)]
    pub counterexample: CounterexampleKnobs,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateKnobs {
    /// Write `trajectory_<r>.csv` and its sidecar for every replica.
    pub write_trajectories: bool,
}

impl Default for SimulateKnobs {
    fn default() -> Self {
        SimulateKnobs {
            write_trajectories: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenewalKnobs {
    /// Skip the block ending at `τ₂`, keeping only blocks `k ≥ 2`.
    pub drop_first: bool,
}

impl Default for RenewalKnobs {
    fn default() -> Self {
        RenewalKnobs { drop_first: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpeedCurveKnobs {
    pub p_grid: Vec<f64>,
}

impl Default for SpeedCurveKnobs {
    fn default() -> Self {
        SpeedCurveKnobs {
            p_grid: (1..=10).map(|i| i as f64 / 10.0).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CltKnobs {
    /// Largest accepted KS distance to the standard normal.
    pub ks_threshold: f64,
}

impl Default for CltKnobs {
    fn default() -> Self {
        CltKnobs { ks_threshold: 0.10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LilKnobs {
    pub n_min: u64,
    /// Accepted range of the per-replica maximum.
    pub band: [f64; 2],
}

impl Default for LilKnobs {
    fn default() -> Self {
        LilKnobs {
            n_min: 10_000,
            band: [0.4, 1.6],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrandKnobs {
    /// Sorted grid for the vertex-count comparison.
    pub p_grid: Vec<f64>,
    /// Instance compared against direct Bernoulli runs.
    pub marginal_p: f64,
    /// Step at which the marginal comparison reads the depth.
    pub marginal_step: u64,
    /// Runs on each side of the marginal comparison; defaults to all.
    pub marginal_runs: Option<usize>,
    pub coalescence_p: f64,
    pub coalescence_q: f64,
    pub coalescence_n: u64,
    /// Runs are split into this many batches for the agreement frequencies.
    pub batches: usize,
    /// Event logs are written for the first this-many runs.
    pub log_runs: usize,
    pub check_invariants: bool,
}

impl Default for GrandKnobs {
    fn default() -> Self {
        GrandKnobs {
            p_grid: vec![0.1, 0.3, 0.5, 0.7, 0.9],
            marginal_p: 0.6,
            marginal_step: 100,
            marginal_runs: None,
            coalescence_p: 0.5,
            coalescence_q: 0.55,
            coalescence_n: 20,
            batches: 10,
            log_runs: 1,
            check_invariants: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TvKnobs {
    pub law_a: LeafLaw,
    pub law_b: LeafLaw,
}

impl Default for TvKnobs {
    fn default() -> Self {
        TvKnobs {
            law_a: LeafLaw::bernoulli(0.5).expect("valid"),
            law_b: LeafLaw::bernoulli(0.7).expect("valid"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonotoneKnobs {
    pub law: LeafLaw,
    pub kappa: f64,
    /// Initial-tree vertex whose hitting times are compared.
    pub target: u32,
}

impl Default for MonotoneKnobs {
    fn default() -> Self {
        MonotoneKnobs {
            law: LeafLaw::new(vec![0, 1, 2], vec![0.5, 0.2, 0.3]).expect("valid"),
            kappa: 0.4,
            target: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CounterexampleKnobs {
    pub p: f64,
    pub q: f64,
    pub j_max: usize,
    /// The top-level `horizon` replaces `pilot.speed_horizon`; `replicas` counts the
    /// fresh runs that measure `D_k / k` at the checkpoints.
    pub pilot: PilotConfig,
}

impl Default for CounterexampleKnobs {
    fn default() -> Self {
        CounterexampleKnobs {
            p: 0.2,
            q: 0.9,
            j_max: 4,
            pilot: PilotConfig::default(),
        }
    }
}

/// Top-level fields that may be set from the command line.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub replicas: Option<usize>,
    pub horizon: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    /// Parse and validate a JSON document, applying `overrides` first.
    pub fn from_json(text: &str, overrides: &Overrides) -> Result<Self> {
        let mut value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| RunError::config("", e.to_string()))?;
        let obj = value
            .as_object_mut()
            .ok_or_else(|| RunError::config("", "config must be a JSON object"))?;
        match obj.get("experiment") {
            Some(serde_json::Value::String(name)) => {
                Experiment::parse(name)?;
            }
            Some(_) => return Err(RunError::config("experiment", "must be a string")),
            None => return Err(RunError::config("experiment", "missing field")),
        }
        if let Some(seed) = overrides.seed {
            obj.insert("master_seed".into(), seed.into());
        }
        if let Some(r) = overrides.replicas {
            obj.insert("replicas".into(), r.into());
        }
        if let Some(h) = overrides.horizon {
            obj.insert("horizon".into(), h.into());
        }
        if let Some(out) = &overrides.out {
            obj.insert("out".into(), out.to_string_lossy().into_owned().into());
        }
        if let Some(w) = overrides.workers {
            obj.insert("workers".into(), w.into());
        }
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(value).map_err(|e| {
            let field = e.path().to_string();
            RunError::config(
                if field == "." { String::new() } else { field },
                e.into_inner().to_string(),
            )
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
        Self::from_json(&text, overrides)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicas == 0 {
            return Err(RunError::config("replicas", "must be at least 1"));
        }
        if self.horizon == 0 {
            return Err(RunError::config("horizon", "must be at least 1"));
        }
        if self.batches == Some(0) {
            return Err(RunError::config("batches", "must be at least 1"));
        }
        if self.workers == Some(0) {
            return Err(RunError::config("workers", "must be at least 1"));
        }
        if let Some(s) = &self.schedule {
            s.validate()
                .map_err(|e| RunError::config("schedule", e.to_string()))?;
        }
        tbrw_core::make_initial(&self.initial)
            .map_err(|e| RunError::config("initial", e.to_string()))?;
        let prob = |field: &str, p: f64| -> Result<()> {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(RunError::config(field, format!("{p} is not in [0, 1]")))
            }
        };
        match self.experiment {
            Experiment::SpeedCurve => {
                if self.speed_curve.p_grid.is_empty() {
                    return Err(RunError::config("speed_curve.p_grid", "must not be empty"));
                }
                for (i, p) in self.speed_curve.p_grid.iter().enumerate() {
                    prob(&format!("speed_curve.p_grid[{i}]"), *p)?;
                }
            }
            Experiment::Clt | Experiment::RenewalStats | Experiment::Tail if self.replicas < 2 => {
                return Err(RunError::config(
                    "replicas",
                    "this experiment needs at least 2",
                ));
            }
            Experiment::Lil => {
                if self.lil.n_min < 3 || self.lil.n_min >= self.horizon {
                    return Err(RunError::config(
                        "lil.n_min",
                        "must be at least 3 and below the horizon",
                    ));
                }
                if self.lil.band.iter().any(|b| b.is_nan()) || self.lil.band[0] > self.lil.band[1] {
                    return Err(RunError::config("lil.band", "lower end exceeds upper end"));
                }
            }
            Experiment::CouplingGrand => {
                let g = &self.coupling_grand;
                for (i, p) in g.p_grid.iter().enumerate() {
                    prob(&format!("coupling_grand.p_grid[{i}]"), *p)?;
                }
                if g.p_grid.windows(2).any(|w| w[0] > w[1]) {
                    return Err(RunError::config("coupling_grand.p_grid", "must be sorted"));
                }
                prob("coupling_grand.marginal_p", g.marginal_p)?;
                prob("coupling_grand.coalescence_p", g.coalescence_p)?;
                prob("coupling_grand.coalescence_q", g.coalescence_q)?;
                if g.marginal_step == 0 || g.marginal_step > self.horizon {
                    return Err(RunError::config(
                        "coupling_grand.marginal_step",
                        "must be in 1..=horizon",
                    ));
                }
                if g.marginal_runs.is_some_and(|m| m == 0 || m > self.replicas) {
                    return Err(RunError::config(
                        "coupling_grand.marginal_runs",
                        "must be in 1..=replicas",
                    ));
                }
                if g.coalescence_n > self.horizon {
                    return Err(RunError::config(
                        "coupling_grand.coalescence_n",
                        "exceeds the horizon",
                    ));
                }
                if g.batches == 0 || g.batches > self.replicas {
                    return Err(RunError::config(
                        "coupling_grand.batches",
                        "must be in 1..=replicas",
                    ));
                }
            }
            Experiment::CouplingMonotone => {
                let m = &self.coupling_monotone;
                if !(m.kappa > 0.0 && m.kappa <= 1.0) {
                    return Err(RunError::config(
                        "coupling_monotone.kappa",
                        "must be in (0, 1]",
                    ));
                }
                if !m.law.is_in_q_kappa(m.kappa - 1e-12) {
                    return Err(RunError::config(
                        "coupling_monotone.law",
                        format!(
                            "mass {} on {{1,2,..}} is below kappa {}",
                            m.law.kappa(),
                            m.kappa
                        ),
                    ));
                }
                let size = tbrw_core::make_initial(&self.initial)
                    .map(|s| s.tree.len())
                    .unwrap_or(0);
                if m.target as usize >= size {
                    return Err(RunError::config(
                        "coupling_monotone.target",
                        "not a vertex of the initial tree",
                    ));
                }
            }
            Experiment::Counterexample => {
                let c = &self.counterexample;
                prob("counterexample.p", c.p)?;
                prob("counterexample.q", c.q)?;
                if !(c.p > 0.0 && c.p < c.q) {
                    return Err(RunError::config("counterexample.p", "need 0 < p < q"));
                }
                if c.j_max == 0 {
                    return Err(RunError::config(
                        "counterexample.j_max",
                        "must be at least 1",
                    ));
                }
                if self.replicas < 2 {
                    return Err(RunError::config(
                        "replicas",
                        "this experiment needs at least 2",
                    ));
                }
                c.pilot
                    .validate()
                    .map_err(|e| RunError::config("counterexample.pilot", e.to_string()))?;
            }
            _ => {}
        }
        Ok(())
    }

    /// The leaf schedule actually run.
    pub fn resolved_schedule(&self) -> LeafSchedule {
        self.schedule
            .clone()
            .unwrap_or_else(|| self.experiment.default_schedule())
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out
            .clone()
            .unwrap_or_else(|| PathBuf::from("out").join(self.experiment.name()))
    }
}
