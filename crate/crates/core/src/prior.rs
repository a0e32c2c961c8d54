//! Class-conditioned relaxed categorical priors.
//!
//! A one-hot code `c` selects logits `1 - (n-1)ε` on the hot class and `ε`
//! elsewhere; the prior is the relaxed categorical with those logits and a
//! freely chosen temperature.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relaxed::RelaxedCategorical;

pub const DEFAULT_EPSILON: f64 = 0.01;

/// A class label over `n >= 2` categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OneHotCode {
    n: usize,
    hot: usize,
}

impl OneHotCode {
    pub fn new(n: usize, hot: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Parameter(format!(
                "need at least 2 categories, got {n}"
            )));
        }
        if hot >= n {
            return Err(Error::Parameter(format!(
                "hot index {hot} out of range for {n} categories"
            )));
        }
        Ok(Self { n, hot })
    }

    /// Parses an explicit 0/1 vector. Soft labels are rejected.
    pub fn from_bits(code: &[u8]) -> Result<Self> {
        if code.iter().any(|&b| b > 1) {
            return Err(Error::Parameter("code entries must be 0 or 1".into()));
        }
        let hot: Vec<usize> = code
            .iter()
            .enumerate()
            .filter(|(_, &b)| b == 1)
            .map(|(i, _)| i)
            .collect();
        match hot.as_slice() {
            [i] => Self::new(code.len(), *i),
            _ => Err(Error::Parameter(format!(
                "code must have exactly one hot entry, found {}",
                hot.len()
            ))),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn hot_index(&self) -> usize {
        self.hot
    }

    pub fn to_bits(&self) -> Vec<u8> {
        (0..self.n).map(|k| u8::from(k == self.hot)).collect()
    }
}

/// Logits with `1 - (n-1)ε` at the hot index and `ε` elsewhere.
///
/// Requires `0 < ε < 1/n`: at `ε = 1/n` the logits are uniform, and beyond
/// it the hot entry is no longer the largest.
pub fn discriminative_logits(c: &OneHotCode, epsilon: f64) -> Result<Vec<f64>> {
    let n = c.n as f64;
    if !(epsilon > 0.0 && epsilon * n < 1.0) {
        return Err(Error::Parameter(format!(
            "epsilon must lie in (0, 1/{n}), got {epsilon}"
        )));
    }
    let hot_value = 1.0 - (n - 1.0) * epsilon;
    Ok((0..c.n)
        .map(|k| if k == c.hot { hot_value } else { epsilon })
        .collect())
}

/// `GumbelSoftmax(f(c; ε), l)`.
pub fn make_discriminative_prior(
    c: &OneHotCode,
    epsilon: f64,
    temperature: f64,
) -> Result<RelaxedCategorical> {
    let logits = discriminative_logits(c, epsilon)?;
    RelaxedCategorical::from_logits(&logits, temperature)
}
