//! Special functions and stable log-space reductions.
//!
//! Everything here works on `f64`. `log_gamma` uses a Lanczos approximation
//! (g = 7, nine coefficients) with the reflection formula below 0.5, and a
//! Taylor series in `ζ(k) - 1` on [0.5, 2.5] where ln Γ has its zeros at 1
//! and 2 and Lanczos loses relative accuracy. The remaining functions are
//! exact finite sums or max-shifted reductions.

// Constants and oracle tables are quoted at the precision they were published
// or computed to, beyond what an f64 holds.
#![allow(clippy::excessive_precision)]

use crate::error::{Error, Result};

/// Euler–Mascheroni constant, the mean of a standard Gumbel variable.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_61;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

// ζ(k) - 1 for k = 2..=30.
const ZETA_MINUS_ONE: [f64; 29] = [
    0.64493406684822643647,
    0.2020569031595942854,
    0.082323233711138191516,
    0.036927755143369926331,
    0.017343061984449139715,
    0.0083492773819228268398,
    0.0040773561979443393787,
    0.0020083928260822144179,
    0.00099457512781808533715,
    0.0004941886041194645587,
    0.00024608655330804829864,
    0.00012271334757848914675,
    0.000061248135058704829259,
    0.000030588236307020493552,
    0.000015282259408651871733,
    7.6371976378997622736e-6,
    3.8172932649998398565e-6,
    1.9082127165539389257e-6,
    9.5396203387279611315e-7,
    4.7693298678780646312e-7,
    2.3845050272773299e-7,
    1.1921992596531107307e-7,
    5.9608189051259479612e-8,
    2.9803503514652280186e-8,
    1.4901554828365041235e-8,
    7.450711789835429492e-9,
    3.7253340247884570548e-9,
    1.8626597235130490064e-9,
    9.3132743241966818287e-10,
];

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_741_78;

/// `H_n = 1 + 1/2 + ... + 1/n`, with `H_0 = 0`.
pub fn harmonic(n: usize) -> f64 {
    // Summed smallest-first for a slightly better rounding profile.
    (1..=n).rev().map(|k| 1.0 / k as f64).sum()
}

/// ψ(n) for a positive integer, via `ψ(n) = -γ + H_{n-1}`.
pub fn digamma_positive_integer(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("digamma is undefined at 0".into()));
    }
    Ok(-EULER_GAMMA + harmonic(n - 1))
}

/// Natural log of Γ(x) for x > 0.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::Domain(format!(
            "log_gamma requires a positive finite argument, got {x}"
        )));
    }
    Ok(ln_gamma_positive(x))
}

pub(crate) fn ln_gamma_positive(x: f64) -> f64 {
    if (0.5..=2.5).contains(&x) {
        return if x < 1.5 {
            // ln Γ(1 + ε) = -ln(1 + ε) + ln Γ(2 + ε)
            -(x - 1.0).ln_1p() + ln_gamma_two_plus(x - 1.0)
        } else {
            ln_gamma_two_plus(x - 2.0)
        };
    }
    if x < 0.5 {
        // Γ(x)Γ(1-x) = π / sin(πx); sin(πx) > 0 on (0, 0.5).
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma_positive(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (x + 0.5) * t.ln() - t + acc.ln()
}

/// ln Γ(2 + ε) = (1 - γ)ε + Σ_{k>=2} (-1)^k (ζ(k) - 1) ε^k / k, for |ε| <= 0.5.
fn ln_gamma_two_plus(eps: f64) -> f64 {
    let mut sum = 0.0;
    let mut power = -eps;
    let mut terms = [0.0; 29];
    for (k, term) in (2..).zip(terms.iter_mut()) {
        power *= -eps;
        *term = ZETA_MINUS_ONE[k - 2] * power / k as f64;
    }
    // Smallest terms first.
    for term in terms.iter().rev() {
        sum += term;
    }
    (1.0 - EULER_GAMMA) * eps + sum
}

/// `log Σ exp(x_i)`, shifted by the maximum. Returns `-inf` for empty input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

/// Writes `softmax(xs)` into `out`.
pub fn softmax_into(xs: &[f64], out: &mut [f64]) {
    debug_assert_eq!(xs.len(), out.len());
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &x) in out.iter_mut().zip(xs) {
        *o = (x - max).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

pub fn softmax(xs: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; xs.len()];
    softmax_into(xs, &mut out);
    out
}

pub fn log_softmax(xs: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(xs);
    xs.iter().map(|&x| x - lse).collect()
}
