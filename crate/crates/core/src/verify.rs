//! Randomized check that the closed-form bounds sandwich the Monte-Carlo
//! divergence, and that their difference equals the analytic gap.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::divergence::{kld_monte_carlo, recab, recab_gap, recab_lower_bound, TemperatureRatio};
use crate::error::{Error, Result};
use crate::relaxed::RelaxedCategorical;
use crate::rng::substream;

/// Absolute tolerance for `recab - lower == gap`.
pub const GAP_IDENTITY_TOLERANCE: f64 = 1e-12;
/// Number of Monte-Carlo standard errors allowed on either side.
pub const SIGMA_MULTIPLIER: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub trials: usize,
    pub min_dim: usize,
    pub max_dim: usize,
    /// Temperatures are drawn log-uniformly from this range.
    pub temp_range: (f64, f64),
    /// Log-logits are drawn uniformly from `[-logit_spread, logit_spread]`.
    pub logit_spread: f64,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            trials: 500,
            min_dim: 2,
            max_dim: 10,
            temp_range: (0.1, 5.0),
            logit_spread: 2.0,
            mc_samples: 10_000,
            seed: 0,
        }
    }
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_dim < 2 || self.max_dim < self.min_dim {
            return Err(Error::Parameter(format!(
                "invalid dimension range {}..{}",
                self.min_dim, self.max_dim
            )));
        }
        let (lo, hi) = self.temp_range;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::Parameter(format!(
                "invalid temperature range {lo},{hi}"
            )));
        }
        if !(self.logit_spread.is_finite() && self.logit_spread >= 0.0) {
            return Err(Error::Parameter("logit spread must be nonnegative".into()));
        }
        if self.mc_samples < 2 {
            return Err(Error::Parameter("mc_samples must be at least 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub posterior: RelaxedCategorical,
    pub prior: RelaxedCategorical,
    pub mc: f64,
    pub mc_std_error: f64,
    pub recab: f64,
    pub lower: f64,
    pub gap: f64,
}

impl TrialRecord {
    pub fn upper_ok(&self) -> bool {
        self.mc - SIGMA_MULTIPLIER * self.mc_std_error <= self.recab
    }

    pub fn lower_ok(&self) -> bool {
        self.lower <= self.mc + SIGMA_MULTIPLIER * self.mc_std_error
    }

    pub fn gap_error(&self) -> f64 {
        (self.recab - self.lower - self.gap).abs()
    }

    pub fn gap_ok(&self) -> bool {
        self.gap_error() <= GAP_IDENTITY_TOLERANCE
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    UpperBound,
    LowerBound,
    GapIdentity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub trial: usize,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub config: VerifyConfig,
    pub trials: Vec<TrialRecord>,
    pub violations: Vec<Violation>,
    pub max_gap_error: f64,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Random posterior/prior pair for trial `index`, plus the stream the
/// Monte-Carlo estimate continues on.
pub fn random_pair<R: Rng + ?Sized>(
    cfg: &VerifyConfig,
    rng: &mut R,
) -> Result<(RelaxedCategorical, RelaxedCategorical)> {
    let n = rng.random_range(cfg.min_dim..=cfg.max_dim);
    let (lo, hi) = cfg.temp_range;
    let mut temperature = || (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp();
    let lambda = temperature();
    let l = temperature();
    let spread = cfg.logit_spread;
    let mut logits =
        || -> Vec<f64> { (0..n).map(|_| rng.random_range(-spread..=spread)).collect() };
    let q = RelaxedCategorical::new(logits(), lambda)?;
    let p = RelaxedCategorical::new(logits(), l)?;
    Ok((q, p))
}

pub fn run_trial(cfg: &VerifyConfig, trial: usize) -> Result<TrialRecord> {
    let mut rng = substream(cfg.seed, trial as u64);
    let (q, p) = random_pair(cfg, &mut rng)?;
    let mc = kld_monte_carlo(&q, &p, cfg.mc_samples, &mut rng)?;
    let upper = recab(&q, &p)?.value;
    let lower = recab_lower_bound(&q, &p)?.value;
    let gap = recab_gap(q.dim(), TemperatureRatio::between(&q, &p)?)?;
    Ok(TrialRecord {
        trial,
        posterior: q,
        prior: p,
        mc: mc.value,
        mc_std_error: mc.sigma(),
        recab: upper,
        lower,
        gap,
    })
}

pub fn verify_bounds(cfg: &VerifyConfig) -> Result<VerifyReport> {
    cfg.validate()?;
    let trials = (0..cfg.trials)
        .map(|i| run_trial(cfg, i))
        .collect::<Result<Vec<_>>>()?;
    let mut violations = Vec::new();
    for rec in &trials {
        for (ok, kind) in [
            (rec.upper_ok(), ViolationKind::UpperBound),
            (rec.lower_ok(), ViolationKind::LowerBound),
            (rec.gap_ok(), ViolationKind::GapIdentity),
        ] {
            if !ok {
                violations.push(Violation {
                    trial: rec.trial,
                    kind,
                });
            }
        }
    }
    let max_gap_error = trials.iter().map(|r| r.gap_error()).fold(0.0, f64::max);
    Ok(VerifyReport {
        config: cfg.clone(),
        trials,
        violations,
        max_gap_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_run_passes_and_is_reproducible() {
        let cfg = VerifyConfig {
            trials: 20,
            mc_samples: 2000,
            seed: 3,
            ..VerifyConfig::default()
        };
        let a = verify_bounds(&cfg).unwrap();
        let b = verify_bounds(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.passed(), "{:?}", a.violations);
        assert!(a
            .trials
            .iter()
            .all(|t| (2..=10).contains(&t.posterior.dim())));
    }

    #[test]
    fn single_trial_matches_batch_entry() {
        let cfg = VerifyConfig {
            trials: 5,
            mc_samples: 500,
            seed: 11,
            ..VerifyConfig::default()
        };
        let report = verify_bounds(&cfg).unwrap();
        assert_eq!(run_trial(&cfg, 4).unwrap(), report.trials[4]);
    }

    #[test]
    fn config_validation() {
        let with = |f: fn(&mut VerifyConfig)| {
            let mut cfg = VerifyConfig::default();
            f(&mut cfg);
            cfg.validate()
        };
        assert!(with(|c| c.min_dim = 1).is_err());
        assert!(with(|c| c.temp_range = (0.0, 1.0)).is_err());
        assert!(with(|c| c.temp_range = (2.0, 1.0)).is_err());
        assert!(with(|c| c.logit_spread = f64::NAN).is_err());
        assert!(with(|_| ()).is_ok());
    }
}
