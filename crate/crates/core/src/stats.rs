//! Frequency statistics behind every probabilistic assertion.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_ur;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("weights not normalized (sum {0})")]
    NotNormalized(f64),
    #[error("expected count {expected} in cell {cell} is below 5")]
    ZeroExpected { cell: usize, expected: f64 },
    #[error("{counts} counts against {weights} weights")]
    LengthMismatch { counts: usize, weights: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson goodness-of-fit of `counts` against the Born `weights`, with
/// k − 1 degrees of freedom.
pub fn chi_square_born(counts: &[u64], weights: &[f64], norm_tol: f64) -> Result<ChiSquare, StatsError> {
    if counts.len() != weights.len() {
        return Err(StatsError::LengthMismatch { counts: counts.len(), weights: weights.len() });
    }
    let total: f64 = weights.iter().sum();
    if weights.is_empty() || weights.iter().any(|w| *w < 0.0 || !w.is_finite()) || (total - 1.0).abs() > norm_tol {
        return Err(StatsError::NotNormalized(total));
    }
    let n: u64 = counts.iter().sum();
    let mut statistic = 0.0;
    for (cell, (&obs, &w)) in counts.iter().zip(weights).enumerate() {
        let expected = w * n as f64;
        if expected < 5.0 {
            return Err(StatsError::ZeroExpected { cell, expected });
        }
        statistic += (obs as f64 - expected).powi(2) / expected;
    }
    let dof = counts.len() - 1;
    let p_value = if dof == 0 || statistic <= 0.0 { 1.0 } else { gamma_ur(dof as f64 / 2.0, statistic / 2.0) };
    Ok(ChiSquare { statistic, dof, p_value })
}

/// A binomial proportion with normal-approximation bands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proportion {
    pub successes: u64,
    pub n: u64,
}

impl Proportion {
    pub fn new(successes: u64, n: u64) -> Self {
        Proportion { successes, n }
    }

    pub fn estimate(&self) -> f64 {
        if self.n == 0 {
            return f64::NAN;
        }
        self.successes as f64 / self.n as f64
    }

    /// Standard error √(p̂(1 − p̂)/n).
    pub fn std_error(&self) -> f64 {
        let p = self.estimate();
        (p * (1.0 - p) / self.n as f64).sqrt()
    }

    /// p̂ ± z·SE, clipped to [0, 1].
    pub fn interval(&self, z: f64) -> (f64, f64) {
        let p = self.estimate();
        let half = z * self.std_error();
        ((p - half).max(0.0), (p + half).min(1.0))
    }
}

/// Whether `count` successes in `n` trials lie within `z` binomial sigmas of
/// the expectation under `p`.
pub fn within_sigma(count: u64, n: u64, p: f64, z: f64) -> bool {
    let sigma = (n as f64 * p * (1.0 - p)).sqrt();
    (count as f64 - n as f64 * p).abs() <= z * sigma
}

/// Plug-in mutual information, in bits, of paired discrete samples.
pub fn empirical_mutual_information(pairs: &[(usize, usize)]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    let na = pairs.iter().map(|p| p.0).max().unwrap_or(0) + 1;
    let nb = pairs.iter().map(|p| p.1).max().unwrap_or(0) + 1;
    let mut joint = vec![vec![0u64; nb]; na];
    for &(a, b) in pairs {
        joint[a][b] += 1;
    }
    let n = pairs.len() as f64;
    let pa: Vec<f64> = joint.iter().map(|row| row.iter().sum::<u64>() as f64 / n).collect();
    let pb: Vec<f64> = (0..nb).map(|j| joint.iter().map(|row| row[j]).sum::<u64>() as f64 / n).collect();
    let mut mi = 0.0;
    for (i, row) in joint.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                let p = c as f64 / n;
                mi += p * (p / (pa[i] * pb[j])).log2();
            }
        }
    }
    mi.max(0.0)
}
