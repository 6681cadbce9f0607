use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

/// A `τ₁` observation: exact, or only known to exceed the given time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TauSample {
    Observed(u64),
    /// `τ₁ > t`.
    Censored(u64),
}

/// Product-limit survival curve: `(0, 1)` followed by `(t, S(t))` at every event time.
pub fn kaplan_meier(samples: &[TauSample]) -> Vec<(u64, f64)> {
    let mut events: Vec<u64> = Vec::new();
    let mut censor: Vec<u64> = Vec::new();
    for s in samples {
        match s {
            TauSample::Observed(t) => events.push(*t),
            TauSample::Censored(t) => censor.push(*t),
        }
    }
    events.sort_unstable();
    censor.sort_unstable();

    let mut curve = alloc::vec![(0u64, 1.0)];
    let mut survival = 1.0;
    let (mut ei, mut ci) = (0usize, 0usize);
    let mut at_risk = samples.len();
    while ei < events.len() {
        let t = events[ei];
        // Censored at c < t have left the risk set; censored at c ≥ t stay in it.
        while ci < censor.len() && censor[ci] < t {
            at_risk -= 1;
            ci += 1;
        }
        let mut deaths = 0;
        while ei < events.len() && events[ei] == t {
            deaths += 1;
            ei += 1;
        }
        survival *= 1.0 - deaths as f64 / at_risk as f64;
        at_risk -= deaths;
        curve.push((t, survival));
    }
    curve
}

/// `S(t) ≈ C exp(-c √t)` fitted on the log scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StretchedExpFit {
    pub scale: f64,
    pub rate: f64,
    pub r_squared: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub survival: Vec<(u64, f64)>,
    /// `None` when fewer than three survival points lie in the fit range.
    pub fit: Option<StretchedExpFit>,
}

/// Survival of `τ₁` plus a least-squares fit of `log S(t)` on `√t` over the
/// points with `S(t) ≥ 10 / samples`.
pub fn tail_survival(samples: &[TauSample]) -> Result<TailFit> {
    let observed = samples
        .iter()
        .filter(|s| matches!(s, TauSample::Observed(_)))
        .count();
    if observed < 100 {
        return Err(Error::InsufficientSamples {
            needed: 100,
            have: observed,
        });
    }
    let survival = kaplan_meier(samples);
    let floor = 10.0 / samples.len() as f64;
    let (x, y): (Vec<f64>, Vec<f64>) = survival
        .iter()
        .filter(|(t, s)| *t > 0 && *s >= floor && *s > 0.0)
        .map(|(t, s)| (libm::sqrt(*t as f64), libm::log(*s)))
        .unzip();
    let fit = if x.len() >= 3 {
        stats::linear_fit(&x, &y).map(|f| StretchedExpFit {
            scale: libm::exp(f.intercept),
            rate: -f.slope,
            r_squared: f.r_squared,
            points: x.len(),
        })
    } else {
        None
    };
    Ok(TailFit { survival, fit })
}
