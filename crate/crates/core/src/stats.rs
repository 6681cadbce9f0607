//! Small statistics kit shared by the estimators and the acceptance checks.

use alloc::vec::Vec;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (`n - 1` denominator).
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Standard error of the mean.
pub fn std_error(xs: &[f64]) -> f64 {
    libm::sqrt(variance(xs) / xs.len() as f64)
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / core::f64::consts::SQRT_2)
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Sup distance between the empirical CDF of `xs` and the standard normal CDF.
pub fn ks_normal(xs: &[f64]) -> f64 {
    let v = sorted(xs);
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < v.len() {
        // Ties: jump over the whole run of equal values at once.
        let mut j = i;
        while j + 1 < v.len() && v[j + 1] == v[i] {
            j += 1;
        }
        let f = normal_cdf(v[i]);
        let below = i as f64 / n;
        let at = (j + 1) as f64 / n;
        d = d.max((f - below).abs()).max((at - f).abs());
        i = j + 1;
    }
    d
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Kolmogorov survival function `P(K > λ) = 2 Σ (-1)^{k-1} exp(-2 k² λ²)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let kf = f64::from(k);
        let term = libm::exp(-2.0 * kf * kf * lambda * lambda);
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Asymptotic p-value of a two-sample KS statistic (with the usual small-sample correction).
pub fn ks_two_sample_pvalue(d: f64, na: usize, nb: usize) -> f64 {
    let en = libm::sqrt((na * nb) as f64 / (na + nb) as f64);
    kolmogorov_sf((en + 0.12 + 0.11 / en) * d)
}

/// Asymptotic p-value of a one-sample KS statistic.
pub fn ks_one_sample_pvalue(d: f64, n: usize) -> f64 {
    let en = libm::sqrt(n as f64);
    kolmogorov_sf((en + 0.12 + 0.11 / en) * d)
}

/// Sample lag-1 autocorrelation.
pub fn lag1_autocorrelation(xs: &[f64]) -> f64 {
    if xs.len() < 3 {
        return f64::NAN;
    }
    let m = mean(xs);
    let denom: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    let num: f64 = xs.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
    num / denom
}

/// Lag-1 autocorrelation pooled over independent series: pairs never straddle two
/// series, and all series share one mean and variance. Returns `(r, pairs)`.
pub fn pooled_lag1_autocorrelation(series: &[Vec<f64>]) -> (f64, usize) {
    let all: Vec<f64> = series.iter().flatten().copied().collect();
    if all.len() < 3 {
        return (f64::NAN, 0);
    }
    let m = mean(&all);
    let var = all.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / all.len() as f64;
    let mut num = 0.0;
    let mut pairs = 0usize;
    for s in series {
        for w in s.windows(2) {
            num += (w[0] - m) * (w[1] - m);
            pairs += 1;
        }
    }
    if pairs == 0 {
        return (f64::NAN, 0);
    }
    (num / pairs as f64 / var, pairs)
}

/// Ordinary least squares `y = intercept + slope·x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 {
        sxy * sxy / (sxx * syy)
    } else {
        1.0
    };
    Some(LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}
