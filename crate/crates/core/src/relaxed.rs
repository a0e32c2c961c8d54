//! The relaxed categorical (Gumbel-softmax / Concrete) distribution.
//!
//! A sample is `z = softmax((log α + g) / λ)` with `g` i.i.d. standard Gumbel
//! noise. Its density on the open simplex (w.r.t. Lebesgue measure on the
//! first `n - 1` coordinates) is
//!
//! ```text
//! p(z) = Γ(n) λ^(n-1) Π_k α_k z_k^(-λ-1) / (Σ_i α_i z_i^(-λ))^n
//! ```
//!
//! Parameters are stored as `log α`; adding a constant to every entry leaves
//! the distribution unchanged.

use rand::distr::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_same_len, Error, Result};
use crate::special::{ln_gamma_positive, log_sum_exp, softmax};

/// Sum-to-one tolerance of a [`SimplexPoint`].
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;
/// Inputs farther than this from summing to one are rejected rather than
/// renormalized.
pub const SIMPLEX_RENORMALIZE_LIMIT: f64 = 1e-6;

pub(crate) const UNIFORM_LO: f64 = f64::EPSILON;
pub(crate) const UNIFORM_HI: f64 = 1.0 - f64::EPSILON;

/// Log-logits and temperature of a relaxed categorical distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRelaxed", into = "RawRelaxed")]
pub struct RelaxedCategorical {
    log_logits: Vec<f64>,
    temperature: f64,
    // ln Γ(n) + (n - 1) ln λ
    log_norm: f64,
}

#[derive(Serialize, Deserialize)]
struct RawRelaxed {
    log_logits: Vec<f64>,
    temperature: f64,
}

impl TryFrom<RawRelaxed> for RelaxedCategorical {
    type Error = Error;

    fn try_from(raw: RawRelaxed) -> Result<Self> {
        Self::new(raw.log_logits, raw.temperature)
    }
}

impl From<RelaxedCategorical> for RawRelaxed {
    fn from(rc: RelaxedCategorical) -> Self {
        RawRelaxed {
            log_logits: rc.log_logits,
            temperature: rc.temperature,
        }
    }
}

impl RelaxedCategorical {
    pub fn new(log_logits: Vec<f64>, temperature: f64) -> Result<Self> {
        let n = log_logits.len();
        if n < 2 {
            return Err(Error::Parameter(format!(
                "need at least 2 categories, got {n}"
            )));
        }
        if let Some(bad) = log_logits.iter().find(|v| !v.is_finite()) {
            return Err(Error::Parameter(format!("non-finite log-logit {bad}")));
        }
        check_temperature(temperature)?;
        let log_norm = ln_gamma_positive(n as f64) + (n - 1) as f64 * temperature.ln();
        Ok(Self {
            log_logits,
            temperature,
            log_norm,
        })
    }

    /// Builds from positive (unnormalized) logits `α`.
    pub fn from_logits(logits: &[f64], temperature: f64) -> Result<Self> {
        if let Some(bad) = logits.iter().find(|&&v| !(v.is_finite() && v > 0.0)) {
            return Err(Error::Parameter(format!(
                "logits must be positive and finite, got {bad}"
            )));
        }
        Self::new(logits.iter().map(|v| v.ln()).collect(), temperature)
    }

    /// Uniform logits.
    pub fn uniform(n: usize, temperature: f64) -> Result<Self> {
        Self::new(vec![0.0; n], temperature)
    }

    pub fn dim(&self) -> usize {
        self.log_logits.len()
    }

    pub fn log_logits(&self) -> &[f64] {
        &self.log_logits
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    /// Category probabilities `α / Σα` of the underlying categorical.
    pub fn probabilities(&self) -> Vec<f64> {
        softmax(&self.log_logits)
    }

    pub fn with_temperature(&self, temperature: f64) -> Result<Self> {
        Self::new(self.log_logits.clone(), temperature)
    }

    pub fn with_log_logits(&self, log_logits: Vec<f64>) -> Result<Self> {
        Self::new(log_logits, self.temperature)
    }

    /// Log-logits shifted to zero mean.
    pub fn centered(&self) -> Self {
        let mut log_logits = self.log_logits.clone();
        center_in_place(&mut log_logits);
        Self {
            log_logits,
            ..self.clone()
        }
    }

    pub(crate) fn log_norm(&self) -> f64 {
        self.log_norm
    }
}

pub(crate) fn check_temperature(temperature: f64) -> Result<()> {
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(Error::Parameter(format!(
            "temperature must be positive and finite, got {temperature}"
        )));
    }
    Ok(())
}

pub(crate) fn center_in_place(xs: &mut [f64]) {
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    for x in xs.iter_mut() {
        *x -= mean;
    }
}

/// A strictly interior point of the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimplexPoint {
    coords: Vec<f64>,
}

impl SimplexPoint {
    /// Validates `coords`. Sums within [`SIMPLEX_RENORMALIZE_LIMIT`] of one are
    /// renormalized; anything farther is rejected.
    ///
    /// A coordinate may round to exactly 1.0 when the others are positive but
    /// below half an ulp of one; that is still accepted.
    pub fn new(mut coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::Parameter(format!(
                "need at least 2 coordinates, got {}",
                coords.len()
            )));
        }
        if let Some(bad) = coords.iter().find(|&&c| !(c > 0.0 && c <= 1.0)) {
            return Err(Error::Domain(format!(
                "simplex coordinates must lie in (0, 1], got {bad}"
            )));
        }
        let sum: f64 = coords.iter().sum();
        let dev = (sum - 1.0).abs();
        if dev > SIMPLEX_RENORMALIZE_LIMIT {
            return Err(Error::Domain(format!(
                "simplex coordinates sum to {sum}, not 1"
            )));
        }
        if dev > SIMPLEX_TOLERANCE {
            for c in coords.iter_mut() {
                *c /= sum;
            }
        }
        Ok(Self { coords })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.coords
    }
}

/// A vector of i.i.d. standard Gumbel draws.
#[derive(Debug, Clone, PartialEq)]
pub struct GumbelVector {
    noise: Vec<f64>,
}

impl GumbelVector {
    pub fn new(noise: Vec<f64>) -> Result<Self> {
        if let Some(bad) = noise.iter().find(|v| !v.is_finite()) {
            return Err(Error::Parameter(format!("non-finite Gumbel noise {bad}")));
        }
        Ok(Self { noise })
    }

    /// Maps uniforms through the inverse Gumbel CDF.
    pub fn from_uniforms(uniforms: &[f64]) -> Self {
        Self {
            noise: uniforms.iter().map(|&u| gumbel_from_uniform(u)).collect(),
        }
    }

    pub fn noise(&self) -> &[f64] {
        &self.noise
    }

    pub fn len(&self) -> usize {
        self.noise.len()
    }

    pub fn is_empty(&self) -> bool {
        self.noise.is_empty()
    }
}

/// `-ln(-ln u)`, with `u` clamped one machine epsilon inside (0, 1).
#[inline]
pub fn gumbel_from_uniform(u: f64) -> f64 {
    let u = u.clamp(UNIFORM_LO, UNIFORM_HI);
    -(-u.ln()).ln()
}

#[cfg(test)]
pub(crate) fn draw_gumbel<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    gumbel_from_uniform(rng.sample(Open01))
}

/// Fills `out` with standard Gumbel draws, one uniform per entry in order.
pub(crate) fn fill_gumbel<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    for u in out.iter_mut() {
        *u = rng.sample(Open01);
    }
    crate::kernel::uniforms_to_gumbel(out);
}

pub fn sample_standard_gumbel<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Result<GumbelVector> {
    if n < 2 {
        return Err(Error::Parameter(format!(
            "need at least 2 categories, got {n}"
        )));
    }
    let mut noise = vec![0.0; n];
    fill_gumbel(rng, &mut noise);
    Ok(GumbelVector { noise })
}

/// Log-coordinates of the reparameterized sample, written into `log_z`.
///
/// Computing `log z` directly keeps low-temperature samples exact where the
/// coordinates themselves would underflow.
#[inline]
pub(crate) fn log_reparameterize_into(
    params: &RelaxedCategorical,
    noise: &[f64],
    log_z: &mut [f64],
) {
    let inv_temp = 1.0 / params.temperature;
    let mut max = f64::NEG_INFINITY;
    for ((lz, &la), &g) in log_z.iter_mut().zip(&params.log_logits).zip(noise) {
        *lz = (la + g) * inv_temp;
        max = max.max(*lz);
    }
    let mut sum = 0.0;
    for &lz in log_z.iter() {
        sum += (lz - max).exp();
    }
    let lse = max + sum.ln();
    for lz in log_z.iter_mut() {
        *lz -= lse;
    }
}

/// `z = softmax((log α + g) / λ)`.
pub fn reparameterize(params: &RelaxedCategorical, g: &GumbelVector) -> Result<SimplexPoint> {
    ensure_same_len(params.dim(), g.len())?;
    let mut log_z = vec![0.0; params.dim()];
    log_reparameterize_into(params, &g.noise, &mut log_z);
    let mut coords: Vec<f64> = log_z
        .iter()
        .map(|&lz| lz.exp().max(f64::MIN_POSITIVE))
        .collect();
    let sum: f64 = coords.iter().sum();
    if sum != 1.0 {
        for c in coords.iter_mut() {
            *c /= sum;
        }
    }
    SimplexPoint::new(coords)
}

/// Draws one sample from `params`.
pub fn sample<R: Rng + ?Sized>(params: &RelaxedCategorical, rng: &mut R) -> Result<SimplexPoint> {
    let g = sample_standard_gumbel(rng, params.dim())?;
    reparameterize(params, &g)
}

/// Log density evaluated from log-coordinates; no validation.
#[inline]
pub(crate) fn log_density_unchecked(params: &RelaxedCategorical, log_z: &[f64]) -> f64 {
    let lambda = params.temperature;
    let mut linear = 0.0;
    let mut max = f64::NEG_INFINITY;
    for (&la, &lz) in params.log_logits.iter().zip(log_z) {
        linear += la - (lambda + 1.0) * lz;
        max = max.max(la - lambda * lz);
    }
    let mut sum = 0.0;
    for (&la, &lz) in params.log_logits.iter().zip(log_z) {
        sum += (la - lambda * lz - max).exp();
    }
    let lse = max + sum.ln();
    params.log_norm + linear - params.dim() as f64 * lse
}

/// Log density at a point given by its log-coordinates.
///
/// The coordinates must be finite and their exponentials must sum to one
/// within [`SIMPLEX_RENORMALIZE_LIMIT`].
pub fn log_density_at_log_coords(params: &RelaxedCategorical, log_z: &[f64]) -> Result<f64> {
    ensure_same_len(params.dim(), log_z.len())?;
    if let Some(bad) = log_z.iter().find(|v| !v.is_finite() || **v > 0.0) {
        return Err(Error::Domain(format!("invalid log-coordinate {bad}")));
    }
    let total = log_sum_exp(log_z);
    if total.abs() > SIMPLEX_RENORMALIZE_LIMIT {
        return Err(Error::Domain(format!(
            "log-coordinates do not sum to one (log-sum {total})"
        )));
    }
    Ok(log_density_unchecked(params, log_z))
}

pub fn log_density(params: &RelaxedCategorical, z: &SimplexPoint) -> Result<f64> {
    ensure_same_len(params.dim(), z.dim())?;
    let log_z: Vec<f64> = z.coords.iter().map(|c| c.ln()).collect();
    Ok(log_density_unchecked(params, &log_z))
}
