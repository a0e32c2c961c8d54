//! Diagonal Gaussian divergence for the continuous latent branch.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_same_len, Error, Result};

/// Mean and log-variance of a diagonal Gaussian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalGaussian {
    pub mean: Vec<f64>,
    pub log_var: Vec<f64>,
}

impl DiagonalGaussian {
    pub fn new(mean: Vec<f64>, log_var: Vec<f64>) -> Result<Self> {
        ensure_same_len(mean.len(), log_var.len())?;
        if mean.iter().chain(&log_var).any(|v| !v.is_finite()) {
            return Err(Error::Parameter(
                "Gaussian parameters must be finite".into(),
            ));
        }
        Ok(Self { mean, log_var })
    }

    pub fn standard(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            log_var: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// `KL(N(μ_q, σ_q²) || N(μ_p, σ_p²))` summed over independent dimensions.
pub fn gaussian_kld(
    mu_q: &[f64],
    log_var_q: &[f64],
    mu_p: &[f64],
    log_var_p: &[f64],
) -> Result<f64> {
    let n = mu_q.len();
    ensure_same_len(n, log_var_q.len())?;
    ensure_same_len(n, mu_p.len())?;
    ensure_same_len(n, log_var_p.len())?;
    let mut total = 0.0;
    for i in 0..n {
        let diff = mu_q[i] - mu_p[i];
        let log_ratio = log_var_q[i] - log_var_p[i];
        let mahalanobis = diff * diff * (-log_var_p[i]).exp();
        // σ_q²/σ_p² - 1 - ln(σ_q²/σ_p²), written with exp_m1 so it stays >= 0.
        total += 0.5 * (log_ratio.exp_m1() - log_ratio + mahalanobis);
    }
    Ok(total)
}

pub fn gaussian_kld_between(q: &DiagonalGaussian, p: &DiagonalGaussian) -> Result<f64> {
    gaussian_kld(&q.mean, &q.log_var, &p.mean, &p.log_var)
}
