//! Hill tail-index estimator, reported on the density-exponent scale.

use crate::error::{Result, TailmixError};

/// `1 + k / Σ_{i=1}^{k} ln(X_(i) / X_(k+1))` over the `k = ⌈tail_fraction·n⌉`
/// largest observations. The leading `1 +` converts the survival index to the
/// exponent of `f(x) ∝ x^{−α}`.
pub fn hill_estimate(sample: &[f64], tail_fraction: f64) -> Result<f64> {
    let n = sample.len();
    if n < 50 {
        return Err(TailmixError::Contract(format!("Hill estimator needs at least 50 observations, got {n}")));
    }
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(TailmixError::Contract(format!("tail fraction must lie in (0, 1], got {tail_fraction}")));
    }
    if sample.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(TailmixError::Domain("Hill estimator needs finite positive observations".into()));
    }
    let k = ((tail_fraction * n as f64).ceil() as usize).min(n - 1);
    if k < 10 {
        return Err(TailmixError::Contract(format!("tail fraction leaves only {k} order statistics (need 10)")));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let threshold = sorted[k];
    let sum: f64 = sorted[..k].iter().map(|&x| (x / threshold).ln()).sum();
    if !(sum > 0.0) {
        return Err(TailmixError::Estimation("degenerate tail: the top order statistics are all equal".into()));
    }
    Ok(1.0 + k as f64 / sum)
}

pub fn hill_estimate_counts(sample: &[u64], tail_fraction: f64) -> Result<f64> {
    let v: Vec<f64> = sample.iter().map(|&x| x as f64).collect();
    hill_estimate(&v, tail_fraction)
}
