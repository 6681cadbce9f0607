use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::stats;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CltSample {
    pub standardized: Vec<f64>,
    pub ks_stat: f64,
}

/// Standardize `(D_N - N v̂) / (σ̂ √N)` and measure its KS distance to N(0, 1).
pub fn clt_samples(d_n: &[f64], n: u64, v_hat: f64, sigma_hat: f64) -> Result<CltSample> {
    if sigma_hat.is_nan() || sigma_hat <= 0.0 {
        return Err(crate::error::invalid("sigma_hat", "must be positive"));
    }
    if n == 0 {
        return Err(crate::error::invalid("n", "must be at least 1"));
    }
    let scale = sigma_hat * libm::sqrt(n as f64);
    let standardized: Vec<f64> = d_n.iter().map(|d| (d - n as f64 * v_hat) / scale).collect();
    let ks_stat = stats::ks_normal(&standardized);
    Ok(CltSample {
        standardized,
        ks_stat,
    })
}
