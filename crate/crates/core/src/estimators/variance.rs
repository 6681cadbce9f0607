use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;
use crate::stopping::Block;

/// Block variances that compete for the CLT/LIL normalization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariancePair {
    /// Sample variance of `Δdepth`.
    pub sigma2_depth: f64,
    /// Sample variance of `Δdepth - v̂·Δτ`.
    pub sigma2_centered: f64,
    /// `sigma2_centered / mean(Δτ)`, the per-step regenerative variance.
    pub sigma2_time_scaled: f64,
    pub n_blocks: usize,
}

pub fn variance_estimators(blocks: &[Block], v_hat: f64) -> Result<VariancePair> {
    if blocks.len() < 2 {
        return Err(Error::InsufficientBlocks {
            needed: 2,
            have: blocks.len(),
        });
    }
    let depth: Vec<f64> = blocks.iter().map(|b| b.delta_depth as f64).collect();
    let centered: Vec<f64> = blocks
        .iter()
        .map(|b| b.delta_depth as f64 - v_hat * b.delta_tau as f64)
        .collect();
    let mean_tau = blocks.iter().map(|b| b.delta_tau as f64).sum::<f64>() / blocks.len() as f64;
    let sigma2_centered = stats::variance(&centered);
    Ok(VariancePair {
        sigma2_depth: stats::variance(&depth),
        sigma2_centered,
        sigma2_time_scaled: sigma2_centered / mean_tau,
        n_blocks: blocks.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaCandidate {
    Depth,
    Centered,
    TimeScaled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaChoice {
    pub chosen: SigmaCandidate,
    pub sigma: f64,
    /// `(candidate, σ², variance of the sample standardized with it)` for every candidate.
    pub standardized_variances: Vec<(SigmaCandidate, f64, f64)>,
}

/// Pick the candidate σ² under which `(D_N - N v̂) / (σ √N)` has sample variance
/// closest to one.
pub fn select_sigma(pair: &VariancePair, d_n: &[f64], n: u64, v_hat: f64) -> Result<SigmaChoice> {
    if d_n.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            have: d_n.len(),
        });
    }
    let centered: Vec<f64> = d_n.iter().map(|d| d - n as f64 * v_hat).collect();
    let raw = centered.iter().map(|c| c * c).sum::<f64>() / (centered.len() - 1) as f64 / n as f64;
    let candidates = [
        (SigmaCandidate::Depth, pair.sigma2_depth),
        (SigmaCandidate::Centered, pair.sigma2_centered),
        (SigmaCandidate::TimeScaled, pair.sigma2_time_scaled),
    ];
    let standardized: Vec<(SigmaCandidate, f64, f64)> = candidates
        .iter()
        .filter(|(_, s2)| *s2 > 0.0 && s2.is_finite())
        .map(|(c, s2)| (*c, *s2, raw / s2))
        .collect();
    let best = standardized
        .iter()
        .min_by(|a, b| libm::fabs(libm::log(a.2)).total_cmp(&libm::fabs(libm::log(b.2))))
        .ok_or_else(|| crate::error::invalid("sigma", "no positive candidate variance"))?;
    Ok(SigmaChoice {
        chosen: best.0,
        sigma: libm::sqrt(best.1),
        standardized_variances: standardized,
    })
}
