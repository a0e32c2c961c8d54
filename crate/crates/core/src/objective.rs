//! Variational objective with a continuous Gaussian latent and a relaxed
//! categorical latent, using the closed-form bound for the discrete term.

use serde::{Deserialize, Serialize};

use crate::divergence::{recab_constant_term, recab_logit_term, TemperatureRatio};
use crate::error::{ensure_same_len, Error, Result};
use crate::gaussian::{gaussian_kld_between, DiagonalGaussian};
use crate::relaxed::RelaxedCategorical;

/// The objective split into a part fixed by the temperatures and a part that
/// carries all parameter gradients. `constant + trainable` is the objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveTerms {
    /// `-(constant term of the bound)`; depends only on `n` and `l / λ`.
    pub constant: f64,
    /// Reconstruction minus Gaussian KL minus the log-softmax term.
    pub trainable: f64,
}

impl ObjectiveTerms {
    pub fn total(&self) -> f64 {
        self.constant + self.trainable
    }
}

pub fn joint_objective_terms(
    recon_loglik: f64,
    q_cont: &DiagonalGaussian,
    p_cont: &DiagonalGaussian,
    q_disc: &RelaxedCategorical,
    prior_disc: &RelaxedCategorical,
) -> Result<ObjectiveTerms> {
    if !recon_loglik.is_finite() {
        return Err(Error::Parameter(format!(
            "reconstruction log-likelihood must be finite, got {recon_loglik}"
        )));
    }
    ensure_same_len(q_disc.dim(), prior_disc.dim())?;
    let t = TemperatureRatio::between(q_disc, prior_disc)?;
    let constant = -recab_constant_term(q_disc.dim(), t)?;
    let trainable = recon_loglik
        - gaussian_kld_between(q_cont, p_cont)?
        - recab_logit_term(q_disc, prior_disc)?;
    Ok(ObjectiveTerms {
        constant,
        trainable,
    })
}

/// `recon - KL_gauss(q_cont || p_cont) - recab(q_disc || prior_disc)`, a lower
/// bound on the evidence lower bound.
pub fn joint_objective(
    recon_loglik: f64,
    q_cont: &DiagonalGaussian,
    p_cont: &DiagonalGaussian,
    q_disc: &RelaxedCategorical,
    prior_disc: &RelaxedCategorical,
) -> Result<f64> {
    joint_objective_terms(recon_loglik, q_cont, p_cont, q_disc, prior_disc).map(|t| t.total())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::recab;

    #[test]
    fn matched_posteriors_leave_bound_slack() {
        let g = DiagonalGaussian::new(vec![0.2, -0.3], vec![0.1, 0.4]).unwrap();
        let q = RelaxedCategorical::from_logits(&[0.2, 0.5, 0.3], 0.8).unwrap();
        let v = joint_objective(0.0, &g, &g, &q, &q).unwrap();
        let slack = recab(&q, &q).unwrap().value;
        assert!((v + slack).abs() < 1e-14);
    }

    #[test]
    fn reconstruction_shifts_additively() {
        let qc = DiagonalGaussian::new(vec![1.0], vec![0.5]).unwrap();
        let pc = DiagonalGaussian::standard(1);
        let q = RelaxedCategorical::from_logits(&[0.2, 0.8], 1.0).unwrap();
        let p = RelaxedCategorical::from_logits(&[0.6, 0.4], 0.5).unwrap();
        let base = joint_objective(-3.0, &qc, &pc, &q, &p).unwrap();
        let shifted = joint_objective(-3.0 + 1.25, &qc, &pc, &q, &p).unwrap();
        assert!((shifted - base - 1.25).abs() < 1e-12);
    }

    #[test]
    fn split_sums_to_total() {
        let qc = DiagonalGaussian::new(vec![0.3, 0.1], vec![-0.2, 0.3]).unwrap();
        let pc = DiagonalGaussian::standard(2);
        let q = RelaxedCategorical::new(vec![0.1, -0.4, 0.9], 0.6).unwrap();
        let p = RelaxedCategorical::new(vec![0.0, 1.0, -1.0], 1.3).unwrap();
        let terms = joint_objective_terms(-12.5, &qc, &pc, &q, &p).unwrap();
        let direct = -12.5 - gaussian_kld_between(&qc, &pc).unwrap() - recab(&q, &p).unwrap().value;
        assert!((terms.total() - direct).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_finite_reconstruction() {
        let g = DiagonalGaussian::standard(1);
        let q = RelaxedCategorical::uniform(2, 1.0).unwrap();
        assert!(joint_objective(f64::NAN, &g, &g, &q, &q).is_err());
    }
}
