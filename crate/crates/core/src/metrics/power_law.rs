use alloc::vec::Vec;

use crate::math::{golden_section_min, hurwitz_zeta, ln};
use crate::{Error, Result};

const MIN_OBSERVATIONS: usize = 10;

/// Discrete power-law fit `p(k) ∝ k^-alpha` for `k >= k_min`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    /// Maximum-likelihood exponent.
    pub alpha: f64,
    pub k_min: usize,
    /// Number of degrees at or above `k_min`.
    pub n_tail: usize,
    /// Closed-form approximation `1 + n / sum ln(k / (k_min - 1/2))`.
    pub approx_alpha: f64,
    pub log_likelihood: f64,
}

fn tail(degrees: &[usize], k_min: usize) -> Result<Vec<usize>> {
    if k_min == 0 {
        return Err(Error::InvalidParameter("k_min must be at least 1".into()));
    }
    let tail: Vec<usize> = degrees.iter().copied().filter(|&k| k >= k_min).collect();
    if tail.len() < MIN_OBSERVATIONS {
        return Err(Error::TooFewObservations { needed: MIN_OBSERVATIONS, got: tail.len() });
    }
    if tail.iter().all(|&k| k == tail[0]) {
        return Err(Error::DegenerateSample("all degrees are identical"));
    }
    Ok(tail)
}

/// Closed-form approximate discrete MLE.
pub fn approximate_alpha(degrees: &[usize], k_min: usize) -> Result<f64> {
    let tail = tail(degrees, k_min)?;
    let shift = k_min as f64 - 0.5;
    let s: f64 = tail.iter().map(|&k| ln(k as f64 / shift)).sum();
    Ok(1.0 + tail.len() as f64 / s)
}

/// Exact discrete maximum-likelihood exponent: maximises
/// `-alpha * sum ln k - n ln zeta(alpha, k_min)` over the degrees `>= k_min`.
pub fn fit_power_law(degrees: &[usize], k_min: usize) -> Result<PowerLawFit> {
    let tail = tail(degrees, k_min)?;
    let n = tail.len() as f64;
    let sum_ln: f64 = tail.iter().map(|&k| ln(k as f64)).sum();
    let q = k_min as f64;
    let neg_ll = |a: f64| a * sum_ln + n * ln(hurwitz_zeta(a, q));
    let approx = approximate_alpha(&tail, k_min)?;
    let hi = (2.0 * approx).max(6.0);
    let alpha = golden_section_min(neg_ll, 1.0 + 1e-6, hi, 1e-10);
    Ok(PowerLawFit { alpha, k_min, n_tail: tail.len(), approx_alpha: approx, log_likelihood: -neg_ll(alpha) })
}
