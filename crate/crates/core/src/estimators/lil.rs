use alloc::vec::Vec;

use crate::error::Result;

/// Running maximum of `|D_n - n v̂| / (σ̂ √(2 n log log n))` for `n = n_min..=N`.
/// Entry `i` covers the window `[n_min, n_min + i]`.
pub fn lil_statistic(depths: &[u32], v_hat: f64, sigma_hat: f64, n_min: usize) -> Result<Vec<f64>> {
    if n_min < 3 {
        return Err(crate::error::invalid("n_min", "log log n needs n >= 3"));
    }
    if sigma_hat.is_nan() || sigma_hat <= 0.0 {
        return Err(crate::error::invalid("sigma_hat", "must be positive"));
    }
    let mut running = 0.0f64;
    Ok(depths
        .iter()
        .enumerate()
        .skip(n_min)
        .map(|(n, d)| {
            let n = n as f64;
            let scale = sigma_hat * libm::sqrt(2.0 * n * libm::log(libm::log(n)));
            running = running.max(libm::fabs(f64::from(*d) - n * v_hat) / scale);
            running
        })
        .collect())
}

/// The final value of [`lil_statistic`]: the max over `[n_min, N]`.
pub fn lil_max(depths: &[u32], v_hat: f64, sigma_hat: f64, n_min: usize) -> Result<f64> {
    Ok(lil_statistic(depths, v_hat, sigma_hat, n_min)?
        .last()
        .copied()
        .unwrap_or(0.0))
}
