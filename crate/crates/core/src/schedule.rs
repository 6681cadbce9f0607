//! Leaf processes: laws on ℕ with finite support and per-step schedules built from them.

use alloc::format;
use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SUM_TOLERANCE: f64 = 1e-12;

/// A probability law on ℕ with finite support.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLaw")]
pub struct LeafLaw {
    support: Vec<u32>,
    probs: Vec<f64>,
}

#[derive(Deserialize)]
struct RawLaw {
    support: Vec<u32>,
    probs: Vec<f64>,
}

impl TryFrom<RawLaw> for LeafLaw {
    type Error = Error;
    fn try_from(raw: RawLaw) -> Result<Self> {
        LeafLaw::new(raw.support, raw.probs)
    }
}

impl LeafLaw {
    /// Support must be sorted and distinct, probabilities nonnegative and summing to one.
    pub fn new(support: Vec<u32>, probs: Vec<f64>) -> Result<Self> {
        if support.is_empty() || support.len() != probs.len() {
            return Err(Error::InvalidLaw(format!(
                "support has {} entries, probs has {}",
                support.len(),
                probs.len()
            )));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidLaw(
                "support must be strictly increasing".into(),
            ));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidLaw(
                "probabilities must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidLaw(format!("probabilities sum to {total}")));
        }
        Ok(LeafLaw { support, probs })
    }

    pub fn point_mass(k: u32) -> Self {
        LeafLaw {
            support: alloc::vec![k],
            probs: alloc::vec![1.0],
        }
    }

    pub fn bernoulli(p: f64) -> Result<Self> {
        check_probability("p", p)?;
        LeafLaw::new(alloc::vec![0, 1], alloc::vec![1.0 - p, p])
    }

    pub fn support(&self) -> &[u32] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, k: u32) -> f64 {
        self.support
            .binary_search(&k)
            .map(|i| self.probs[i])
            .unwrap_or(0.0)
    }

    /// Mass on `{1, 2, ...}`; the law is in `Q_κ` iff this is at least κ.
    pub fn kappa(&self) -> f64 {
        1.0 - self.prob(0)
    }

    pub fn mean(&self) -> f64 {
        self.support
            .iter()
            .zip(&self.probs)
            .map(|(k, p)| f64::from(*k) * p)
            .sum()
    }

    pub fn is_in_q_kappa(&self, kappa: f64) -> bool {
        self.kappa() >= kappa
    }

    /// Inverse-CDF draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        if self.support.len() == 1 {
            return self.support[0];
        }
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (k, p) in self.support.iter().zip(&self.probs) {
            acc += p;
            if u < acc {
                return *k;
            }
        }
        // Rounding left u above the accumulated mass; take the last atom with mass.
        let last = self
            .probs
            .iter()
            .rposition(|p| *p > 0.0)
            .unwrap_or(self.probs.len() - 1);
        self.support[last]
    }

    /// Build a law from unnormalized nonnegative weights, dropping zero atoms.
    pub(crate) fn from_weights(mut atoms: Vec<(u32, f64)>) -> Result<Self> {
        atoms.retain(|(_, w)| *w > 0.0);
        atoms.sort_by_key(|(k, _)| *k);
        let total: f64 = atoms.iter().map(|(_, w)| w).sum();
        if atoms.is_empty() || total <= 0.0 {
            return Err(Error::InvalidLaw("no positive mass".into()));
        }
        let support = atoms.iter().map(|(k, _)| *k).collect();
        let probs = atoms.iter().map(|(_, w)| w / total).collect();
        Ok(LeafLaw { support, probs })
    }
}

pub(crate) fn check_probability(name: &'static str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(crate::error::invalid(name, format!("{p} is not in [0, 1]")));
    }
    Ok(())
}

/// Descriptor of a leaf process `{ξ_n}`. Serializes as `{"kind": ..., ...}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LeafSchedule {
    /// i.i.d. draws from a fixed law.
    Iid(LeafLaw),
    /// i.i.d. Bernoulli(p).
    Bernoulli { p: f64 },
    /// Independent `Ber(n^-γ)` at step `n ≥ 1`.
    Decaying { gamma: f64 },
    /// `noise[n]` before `switch_step`, then a single value drawn once from `limit`.
    /// A one-element `noise` list applies to every pre-switch step.
    Converging {
        noise: Vec<LeafLaw>,
        limit: LeafLaw,
        switch_step: u64,
    },
    /// `Ber(p)` on odd blocks `(k_{j-1}, k_j]`, `Ber(q)` on even blocks; the last
    /// block's law continues past the final checkpoint.
    Alternating {
        p: f64,
        q: f64,
        checkpoints: Vec<u64>,
    },
}

/// What a converging schedule drew when it was instantiated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvergingRealization {
    pub limit: u32,
    pub switch_step: u64,
}

impl LeafSchedule {
    pub fn iid(law: LeafLaw) -> Self {
        LeafSchedule::Iid(law)
    }

    pub fn bernoulli(p: f64) -> Result<Self> {
        check_probability("p", p)?;
        Ok(LeafSchedule::Bernoulli { p })
    }

    pub fn decaying(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(crate::error::invalid(
                "gamma",
                format!("{gamma} must be positive"),
            ));
        }
        Ok(LeafSchedule::Decaying { gamma })
    }

    pub fn converging(noise: Vec<LeafLaw>, limit: LeafLaw, switch_step: u64) -> Result<Self> {
        let s = LeafSchedule::Converging {
            noise,
            limit,
            switch_step,
        };
        s.validate()?;
        Ok(s)
    }

    /// Check the parameters of a descriptor (useful after deserialization).
    pub fn validate(&self) -> Result<()> {
        match self {
            LeafSchedule::Iid(_) => Ok(()),
            LeafSchedule::Bernoulli { p } => check_probability("p", *p),
            LeafSchedule::Decaying { gamma } => LeafSchedule::decaying(*gamma).map(|_| ()),
            LeafSchedule::Converging {
                noise, switch_step, ..
            } => {
                if *switch_step < 1 {
                    return Err(Error::InvalidSchedule(
                        "switch_step must be at least 1".into(),
                    ));
                }
                let pre_switch = (*switch_step - 1) as usize;
                if pre_switch > 0 && noise.len() != 1 && noise.len() != pre_switch {
                    return Err(Error::InvalidSchedule(format!(
                        "noise needs 1 or {pre_switch} laws, got {}",
                        noise.len()
                    )));
                }
                if pre_switch > 0 && noise.is_empty() {
                    return Err(Error::InvalidSchedule("noise is empty".into()));
                }
                Ok(())
            }
            LeafSchedule::Alternating { p, q, checkpoints } => {
                check_probability("p", *p)?;
                check_probability("q", *q)?;
                if checkpoints.is_empty() || checkpoints[0] == 0 {
                    return Err(Error::InvalidSchedule(
                        "checkpoints must start above 0".into(),
                    ));
                }
                if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::InvalidSchedule("checkpoints must increase".into()));
                }
                Ok(())
            }
        }
    }

    /// `inf_n P(ξ_n ≥ 1)`, the uniform-ellipticity constant.
    pub fn kappa(&self) -> f64 {
        match self {
            LeafSchedule::Iid(law) => law.kappa(),
            LeafSchedule::Bernoulli { p } => *p,
            LeafSchedule::Decaying { .. } => 0.0,
            LeafSchedule::Converging { noise, limit, .. } => noise
                .iter()
                .map(LeafLaw::kappa)
                .fold(limit.kappa(), f64::min),
            LeafSchedule::Alternating { p, q, .. } => p.min(*q),
        }
    }

    /// Draw per-replica state (the limit value of a converging schedule).
    pub fn instantiate<R: Rng + ?Sized>(&self, rng: &mut R) -> LeafSampler<'_> {
        let realization = match self {
            LeafSchedule::Converging {
                limit, switch_step, ..
            } => Some(ConvergingRealization {
                limit: limit.sample(rng),
                switch_step: *switch_step,
            }),
            _ => None,
        };
        LeafSampler {
            schedule: self,
            realization,
        }
    }
}

/// A schedule bound to one replica.
#[derive(Clone, Debug)]
pub struct LeafSampler<'a> {
    schedule: &'a LeafSchedule,
    realization: Option<ConvergingRealization>,
}

impl LeafSampler<'_> {
    pub fn realization(&self) -> Option<ConvergingRealization> {
        self.realization
    }

    /// Success probability of a Bernoulli step, when the step law is Bernoulli.
    pub fn bernoulli_parameter(&self, step: u64) -> Option<f64> {
        match self.schedule {
            LeafSchedule::Bernoulli { p } => Some(*p),
            LeafSchedule::Decaying { gamma } => Some(libm::pow(step.max(1) as f64, -gamma)),
            LeafSchedule::Alternating { p, q, checkpoints } => {
                Some(if alternating_block(checkpoints, step) % 2 == 1 {
                    *p
                } else {
                    *q
                })
            }
            _ => None,
        }
    }

    /// Draw `ξ_step` (steps are numbered from 1).
    pub fn sample<R: Rng + ?Sized>(&self, step: u64, rng: &mut R) -> u32 {
        if let Some(p) = self.bernoulli_parameter(step) {
            return u32::from(rng.random::<f64>() < p);
        }
        match self.schedule {
            LeafSchedule::Iid(law) => law.sample(rng),
            LeafSchedule::Converging {
                noise, switch_step, ..
            } => {
                if step >= *switch_step {
                    self.realization.map(|r| r.limit).unwrap_or(0)
                } else {
                    let i = ((step.max(1) - 1) as usize).min(noise.len() - 1);
                    noise[i].sample(rng)
                }
            }
            _ => unreachable!("bernoulli kinds handled above"),
        }
    }
}

/// 1-based index `j` of the block `(k_{j-1}, k_j]` containing `step`; past the
/// last checkpoint this stays at the last block.
pub fn alternating_block(checkpoints: &[u64], step: u64) -> usize {
    let j = checkpoints.partition_point(|k| *k < step) + 1;
    j.min(checkpoints.len().max(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn law_validation() {
        assert!(LeafLaw::new(alloc::vec![0, 1], alloc::vec![0.5, 0.5]).is_ok());
        assert!(LeafLaw::new(alloc::vec![1, 0], alloc::vec![0.5, 0.5]).is_err());
        assert!(LeafLaw::new(alloc::vec![0, 0], alloc::vec![0.5, 0.5]).is_err());
        assert!(LeafLaw::new(alloc::vec![0, 1], alloc::vec![0.6, 0.5]).is_err());
        assert!(LeafLaw::new(alloc::vec![0, 1], alloc::vec![-0.1, 1.1]).is_err());
        assert!(LeafLaw::new(alloc::vec![], alloc::vec![]).is_err());
    }

    #[test]
    fn delta_zero_has_kappa_zero_and_draws_zero() {
        let s = LeafSchedule::iid(LeafLaw::point_mass(0));
        assert_eq!(s.kappa(), 0.0);
        let mut r = rng::stream(1);
        let sampler = s.instantiate(&mut r);
        assert!((1..1000).all(|n| sampler.sample(n, &mut r) == 0));
    }

    #[test]
    fn bernoulli_law_mean_and_kappa() {
        let law = LeafLaw::bernoulli(0.3).unwrap();
        assert_eq!(law.kappa(), 1.0 - law.prob(0));
        assert!((law.kappa() - 0.3).abs() < 1e-15);
        let s = LeafSchedule::iid(law);
        let mut r = rng::stream(2);
        let sampler = s.instantiate(&mut r);
        let n = 100_000;
        let total: u64 = (1..=n).map(|k| u64::from(sampler.sample(k, &mut r))).sum();
        assert!((total as f64 / n as f64 - 0.3).abs() < 0.01);
    }

    #[test]
    fn two_point_law_support() {
        let law = LeafLaw::new(alloc::vec![0, 2], alloc::vec![0.5, 0.5]).unwrap();
        let mut r = rng::stream(3);
        let mut twos = 0;
        let n = 100_000;
        for _ in 0..n {
            match law.sample(&mut r) {
                0 => {}
                2 => twos += 1,
                other => panic!("drew {other}"),
            }
        }
        assert!((f64::from(twos) / f64::from(n) - 0.5).abs() < 0.01);
    }

    #[test]
    fn decaying_probabilities() {
        let s = LeafSchedule::decaying(1.0).unwrap();
        let mut r = rng::stream(0);
        assert_eq!(s.instantiate(&mut r).bernoulli_parameter(4), Some(0.25));
        let s = LeafSchedule::decaying(0.75).unwrap();
        let p = s.instantiate(&mut r).bernoulli_parameter(16).unwrap();
        assert!((p - 0.125).abs() < 1e-15);
        assert!(LeafSchedule::decaying(0.0).is_err());
    }

    #[test]
    fn decaying_expected_count_matches_partial_sum() {
        // Oracle: E[count] = Σ k^-γ, Var = Σ p_k (1 - p_k).
        let gamma = 0.8;
        let steps = 2000u64;
        let (mean, var) = (1..=steps).fold((0.0, 0.0), |(m, v), k| {
            let p = libm::pow(k as f64, -gamma);
            (m + p, v + p * (1.0 - p))
        });
        let s = LeafSchedule::decaying(gamma).unwrap();
        let mut r = rng::stream(11);
        let runs = 400;
        let mut total = 0u64;
        for _ in 0..runs {
            let sampler = s.instantiate(&mut r);
            total += (1..=steps)
                .map(|k| u64::from(sampler.sample(k, &mut r)))
                .sum::<u64>();
        }
        let avg = total as f64 / f64::from(runs);
        let sd = libm::sqrt(var / f64::from(runs));
        assert!((avg - mean).abs() < 3.0 * sd, "{avg} vs {mean} ± {sd}");
    }

    #[test]
    fn converging_is_constant_after_switch() {
        let s = LeafSchedule::converging(
            alloc::vec![LeafLaw::bernoulli(0.5).unwrap()],
            LeafLaw::new(alloc::vec![1, 2], alloc::vec![0.5, 0.5]).unwrap(),
            50,
        )
        .unwrap();
        let mut r = rng::stream(5);
        let mut twos = 0;
        for _ in 0..2000 {
            let sampler = s.instantiate(&mut r);
            let k = sampler.realization().unwrap().limit;
            assert!((50..300).all(|n| sampler.sample(n, &mut r) == k));
            twos += usize::from(k == 2);
        }
        assert!((twos as f64 / 2000.0 - 0.5).abs() < 0.05);
    }

    #[test]
    fn converging_point_mass_one_is_iid_point_mass() {
        let s = LeafSchedule::converging(alloc::vec![], LeafLaw::point_mass(1), 1).unwrap();
        let mut r = rng::stream(5);
        let sampler = s.instantiate(&mut r);
        assert!((1..100).all(|n| sampler.sample(n, &mut r) == 1));
    }

    #[test]
    fn alternating_block_assignment() {
        let ks = [3u64, 10, 40];
        assert_eq!(alternating_block(&ks, 1), 1);
        assert_eq!(alternating_block(&ks, 3), 1);
        assert_eq!(alternating_block(&ks, 4), 2);
        assert_eq!(alternating_block(&ks, 10), 2);
        assert_eq!(alternating_block(&ks, 11), 3);
        assert_eq!(alternating_block(&ks, 41), 3);
        let s = LeafSchedule::Alternating {
            p: 0.2,
            q: 0.9,
            checkpoints: ks.to_vec(),
        };
        let mut r = rng::stream(0);
        let sampler = s.instantiate(&mut r);
        assert_eq!(sampler.bernoulli_parameter(2), Some(0.2));
        assert_eq!(sampler.bernoulli_parameter(5), Some(0.9));
        assert_eq!(sampler.bernoulli_parameter(12), Some(0.2));
    }

    #[test]
    fn schedule_json_shape() {
        let s = LeafSchedule::iid(LeafLaw::bernoulli(0.25).unwrap());
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(
            json,
            r#"{"kind":"iid","support":[0,1],"probs":[0.75,0.25]}"#
        );
        let back: LeafSchedule = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        let bad = r#"{"kind":"iid","support":[0,1],"probs":[0.7,0.7]}"#;
        assert!(serde_json::from_str::<LeafSchedule>(bad).is_err());
        let b: LeafSchedule = serde_json::from_str(r#"{"kind":"bernoulli","p":0.5}"#).unwrap();
        assert_eq!(b, LeafSchedule::Bernoulli { p: 0.5 });
    }
}
