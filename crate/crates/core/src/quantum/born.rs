use rand::Rng;

use super::{QuantumError, Result};

/// Draws index `i` with probability `weights[i]`.
///
/// One uniform variate is consumed per call, so the result is a function of
/// the seed and the stream position only.
pub fn born_sample<R: Rng + ?Sized>(weights: &[f64], norm_tol: f64, rng: &mut R) -> Result<usize> {
    let total: f64 = weights.iter().sum();
    if weights.is_empty() || weights.iter().any(|w| !w.is_finite() || *w < -norm_tol) || (total - 1.0).abs() > norm_tol {
        return Err(QuantumError::NotNormalized(total));
    }
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        if u < acc {
            return Ok(i);
        }
    }
    // Rounding left `u` past the last partial sum.
    Ok(weights.iter().rposition(|&w| w > 0.0).unwrap_or(0))
}
