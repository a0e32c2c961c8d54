//! Estimators of `KL(q || p)` between two relaxed categorical distributions.
//!
//! `q` has log-logits `log α` and temperature `λ`; `p` has `log a` and `l`.
//! Writing `t = l / λ` and `A_k = log a_k - t log α_k`, the divergence splits
//! exactly into
//!
//! ```text
//! KL = -(n-1) ln t - Σ A_k - (1 - t) E[Σ g_k] - n E[lse(-g)] + n E[lse(A - t g)]
//! ```
//!
//! with `E[Σ g] = nγ` and `E[lse(-g)] = ψ(n)`. The last expectation has no
//! closed form. Bounding it above by `lse(A) + ln Γ(1 + t)` gives [`recab`];
//! bounding it below by `lse(A) - γt` gives [`recab_lower_bound`]. The two
//! differ by [`recab_gap`], which does not depend on the logits.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{ensure_same_len, Error, Result};
use crate::kernel::log_ratios;
use crate::relaxed::{fill_gumbel, RelaxedCategorical};
use crate::special::{
    digamma_positive_integer, harmonic, ln_gamma_positive, log_sum_exp, softmax, EULER_GAMMA,
};

/// Which estimator produced a [`DivergenceEstimate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Estimator {
    #[serde(rename = "mc")]
    MonteCarlo,
    #[serde(rename = "ca")]
    CategoricalApprox,
    #[serde(rename = "recab")]
    Recab,
    #[serde(rename = "recab_lower")]
    RecabLower,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::MonteCarlo => "mc",
            Estimator::CategoricalApprox => "ca",
            Estimator::Recab => "recab",
            Estimator::RecabLower => "recab_lower",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mc" => Ok(Estimator::MonteCarlo),
            "ca" => Ok(Estimator::CategoricalApprox),
            "recab" => Ok(Estimator::Recab),
            "recab_lower" | "recab-lower" | "lower" => Ok(Estimator::RecabLower),
            other => Err(Error::Parameter(format!("unknown estimator '{other}'"))),
        }
    }
}

/// A divergence value tagged with the estimator that produced it.
///
/// Only Monte-Carlo estimates carry a standard error and sample count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceEstimate {
    pub value: f64,
    pub std_error: Option<f64>,
    pub estimator: Estimator,
    pub sample_count: Option<usize>,
}

impl DivergenceEstimate {
    fn exact(estimator: Estimator, value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::Domain(format!("{estimator} estimate is not finite")));
        }
        Ok(Self {
            value,
            std_error: None,
            estimator,
            sample_count: None,
        })
    }

    fn monte_carlo(value: f64, std_error: f64, samples: usize) -> Result<Self> {
        if !value.is_finite() || !std_error.is_finite() {
            return Err(Error::Domain("Monte-Carlo estimate is not finite".into()));
        }
        Ok(Self {
            value,
            std_error: Some(std_error),
            estimator: Estimator::MonteCarlo,
            sample_count: Some(samples),
        })
    }

    /// Standard error, or zero for deterministic estimators.
    pub fn sigma(&self) -> f64 {
        self.std_error.unwrap_or(0.0)
    }
}

/// Prior temperature over posterior temperature, `t = l / λ`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct TemperatureRatio(f64);

impl TemperatureRatio {
    pub fn new(t: f64) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::Parameter(format!(
                "temperature ratio must be positive and finite, got {t}"
            )));
        }
        Ok(Self(t))
    }

    /// `l / λ` for posterior `q` and prior `p`.
    pub fn between(q: &RelaxedCategorical, p: &RelaxedCategorical) -> Result<Self> {
        Self::new(p.temperature() / q.temperature())
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

fn check_pair(q: &RelaxedCategorical, p: &RelaxedCategorical) -> Result<()> {
    ensure_same_len(q.dim(), p.dim())
}

fn check_count(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Parameter(format!(
            "need at least 2 categories, got {n}"
        )));
    }
    Ok(())
}

/// Running mean and unbiased variance (Welford).
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct RunningStats {
    count: usize,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    #[inline]
    pub(crate) fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub(crate) fn mean(&self) -> f64 {
        self.mean
    }

    pub(crate) fn std_error(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let var = self.m2 / (self.count - 1) as f64;
        (var / self.count as f64).sqrt()
    }
}

/// Mean log-ratio over a fixed block of Gumbel draws laid out row-major,
/// `noise.len() == samples * n`.
pub(crate) fn monte_carlo_with_noise(
    q: &RelaxedCategorical,
    p: &RelaxedCategorical,
    noise: &[f64],
) -> Result<DivergenceEstimate> {
    let samples = noise.len() / q.dim();
    let mut ratios = vec![0.0; samples];
    log_ratios(q, p, noise, &mut ratios);
    let mut stats = RunningStats::default();
    for &r in &ratios {
        stats.push(r);
    }
    DivergenceEstimate::monte_carlo(stats.mean(), stats.std_error(), samples)
}

const MC_BATCH: usize = 1024;

/// Sample-average estimate of `KL(q || p)` from `samples` reparameterized
/// draws of `q`, with the standard error of the mean.
pub fn kld_monte_carlo<R: Rng + ?Sized>(
    q: &RelaxedCategorical,
    p: &RelaxedCategorical,
    samples: usize,
    rng: &mut R,
) -> Result<DivergenceEstimate> {
    check_pair(q, p)?;
    if samples < 2 {
        return Err(Error::Parameter(format!(
            "Monte-Carlo estimate needs at least 2 samples, got {samples}"
        )));
    }
    let n = q.dim();
    // Batching changes nothing but speed: the stream is consumed in sample
    // order either way.
    let mut noise = vec![0.0; MC_BATCH * n];
    let mut ratios = vec![0.0; MC_BATCH];
    let mut stats = RunningStats::default();
    let mut remaining = samples;
    while remaining > 0 {
        let b = remaining.min(MC_BATCH);
        let noise = &mut noise[..b * n];
        fill_gumbel(rng, noise);
        log_ratios(q, p, noise, &mut ratios[..b]);
        for &r in &ratios[..b] {
            stats.push(r);
        }
        remaining -= b;
    }
    DivergenceEstimate::monte_carlo(stats.mean(), stats.std_error(), samples)
}

/// KL divergence between the underlying categoricals `softmax(log α)` and
/// `softmax(log a)`. Temperatures play no part.
pub fn kld_categorical_approx(
    q: &RelaxedCategorical,
    p: &RelaxedCategorical,
) -> Result<DivergenceEstimate> {
    check_pair(q, p)?;
    DivergenceEstimate::exact(Estimator::CategoricalApprox, categorical_kl(q, p))
}

fn categorical_kl(q: &RelaxedCategorical, p: &RelaxedCategorical) -> f64 {
    let lse_q = log_sum_exp(q.log_logits());
    let lse_p = log_sum_exp(p.log_logits());
    q.log_logits()
        .iter()
        .zip(p.log_logits())
        .map(|(&lq, &lp)| {
            let log_q = lq - lse_q;
            log_q.exp() * (log_q - (lp - lse_p))
        })
        .sum()
}

/// Gradient of [`kld_categorical_approx`] with respect to `q`'s log-logits.
pub fn kld_categorical_approx_grad(
    q: &RelaxedCategorical,
    p: &RelaxedCategorical,
) -> Result<Vec<f64>> {
    check_pair(q, p)?;
    let kl = categorical_kl(q, p);
    let lse_q = log_sum_exp(q.log_logits());
    let lse_p = log_sum_exp(p.log_logits());
    Ok(q.log_logits()
        .iter()
        .zip(p.log_logits())
        .map(|(&lq, &lp)| {
            let log_q = lq - lse_q;
            log_q.exp() * (log_q - (lp - lse_p) - kl)
        })
        .collect())
}

/// The logit-independent part of the bound:
/// `-(n-1) ln t + n (γt + ln Γ(1+t) - H_{n-1})`.
///
/// Depends only on `(n, t)`, so it can be computed once when temperatures
/// are fixed.
pub fn recab_constant_term(n: usize, t: TemperatureRatio) -> Result<f64> {
    check_count(n)?;
    let t = t.get();
    let nf = n as f64;
    Ok(
        -(nf - 1.0) * t.ln()
            + nf * (EULER_GAMMA * t + ln_gamma_positive(1.0 + t) - harmonic(n - 1)),
    )
}

fn shifted_prior_logits(q: &RelaxedCategorical, p: &RelaxedCategorical, t: f64) -> Vec<f64> {
    p.log_logits()
        .iter()
        .zip(q.log_logits())
        .map(|(&la, &lal)| la - t * lal)
        .collect()
}

/// `-Σ_k log_softmax_k(log a - t log α)`, the only logit-dependent term of
/// the bound.
pub fn recab_logit_term(q: &RelaxedCategorical, p: &RelaxedCategorical) -> Result<f64> {
    check_pair(q, p)?;
    let t = TemperatureRatio::between(q, p)?.get();
    let shifted = shifted_prior_logits(q, p, t);
    let lse = log_sum_exp(&shifted);
    Ok(shifted.iter().map(|&a| lse - a).sum())
}

/// Closed-form upper bound on `KL(q || p)`.
pub fn recab(q: &RelaxedCategorical, p: &RelaxedCategorical) -> Result<DivergenceEstimate> {
    check_pair(q, p)?;
    let t = TemperatureRatio::between(q, p)?;
    let value = recab_constant_term(q.dim(), t)? + recab_logit_term(q, p)?;
    DivergenceEstimate::exact(Estimator::Recab, value)
}

/// Closed-form lower bound on `KL(q || p)`: the same decomposition with
/// `E[lse(A - t g)]` bounded below by `lse_k(A_k - γt)`.
pub fn recab_lower_bound(
    q: &RelaxedCategorical,
    p: &RelaxedCategorical,
) -> Result<DivergenceEstimate> {
    check_pair(q, p)?;
    let n = q.dim();
    let nf = n as f64;
    let t = TemperatureRatio::between(q, p)?.get();
    let shifted = shifted_prior_logits(q, p, t);
    let sum_a: f64 = shifted.iter().sum();
    let lse_lower = log_sum_exp(
        &shifted
            .iter()
            .map(|&a| a - EULER_GAMMA * t)
            .collect::<Vec<_>>(),
    );
    let value = -(nf - 1.0) * t.ln()
        - sum_a
        - (1.0 - t) * nf * EULER_GAMMA
        - nf * digamma_positive_integer(n)?
        + nf * lse_lower;
    DivergenceEstimate::exact(Estimator::RecabLower, value)
}

/// `n (ln Γ(1+t) + γt)`: the distance between [`recab`] and
/// [`recab_lower_bound`], and so the largest possible excess of the upper
/// bound over the true divergence. Nonnegative because `ln Γ(1+t)` is convex
/// with slope `-γ` at zero.
pub fn recab_gap(n: usize, t: TemperatureRatio) -> Result<f64> {
    check_count(n)?;
    let t = t.get();
    Ok(n as f64 * (ln_gamma_positive(1.0 + t) + EULER_GAMMA * t))
}

/// `∂ recab / ∂ log α = t (1 - n softmax(log a - t log α))`.
pub fn recab_grad_posterior_log_logits(
    q: &RelaxedCategorical,
    p: &RelaxedCategorical,
) -> Result<Vec<f64>> {
    check_pair(q, p)?;
    let t = TemperatureRatio::between(q, p)?.get();
    let nf = q.dim() as f64;
    let s = softmax(&shifted_prior_logits(q, p, t));
    Ok(s.into_iter().map(|sk| t * (1.0 - nf * sk)).collect())
}

/// Dispatches to the deterministic estimators. Monte-Carlo needs a random
/// source and goes through [`kld_monte_carlo`] instead.
pub fn evaluate_closed_form(
    estimator: Estimator,
    q: &RelaxedCategorical,
    p: &RelaxedCategorical,
) -> Result<DivergenceEstimate> {
    match estimator {
        Estimator::CategoricalApprox => kld_categorical_approx(q, p),
        Estimator::Recab => recab(q, p),
        Estimator::RecabLower => recab_lower_bound(q, p),
        Estimator::MonteCarlo => Err(Error::Parameter(
            "Monte-Carlo estimation requires a random source".into(),
        )),
    }
}
