//! Gradient-descent fitting of posterior log-logits against a fixed target.
//!
//! The posterior temperature is held fixed; only `log α` moves. Gradients are
//! analytic for the closed-form estimators and central finite differences
//! with common random numbers for Monte-Carlo. After each step the log-logits
//! are shifted back to zero mean, which changes no estimator's value.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::divergence::{
    kld_categorical_approx, kld_categorical_approx_grad, monte_carlo_with_noise, recab,
    recab_grad_posterior_log_logits, DivergenceEstimate, Estimator,
};
use crate::error::{ensure_same_len, Error};
use crate::relaxed::{center_in_place, check_temperature, fill_gumbel, RelaxedCategorical};
use crate::rng::{seeded, StreamRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub estimator: Estimator,
    pub step_size: f64,
    pub max_iters: usize,
    pub grad_tolerance: f64,
    /// Batch size per Monte-Carlo evaluation.
    pub mc_samples: usize,
    /// Finite-difference step for Monte-Carlo gradients.
    pub mc_fd_step: f64,
    pub seed: u64,
    pub record_trajectory: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            estimator: Estimator::Recab,
            step_size: 0.05,
            max_iters: 5000,
            grad_tolerance: 1e-5,
            mc_samples: 32,
            mc_fd_step: 1e-2,
            seed: 0,
            record_trajectory: false,
        }
    }
}

impl FitConfig {
    pub fn for_estimator(estimator: Estimator) -> Self {
        Self {
            estimator,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Parameter(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        positive("step_size", self.step_size)?;
        positive("grad_tolerance", self.grad_tolerance)?;
        if self.max_iters < 1 {
            return Err(Error::Parameter("max_iters must be at least 1".into()));
        }
        match self.estimator {
            Estimator::MonteCarlo => {
                positive("mc_fd_step", self.mc_fd_step)?;
                if self.mc_samples < 2 {
                    return Err(Error::Parameter(format!(
                        "mc_samples must be at least 2, got {}",
                        self.mc_samples
                    )));
                }
            }
            Estimator::RecabLower => {
                return Err(Error::Parameter(
                    "fitting supports the mc, ca and recab estimators".into(),
                ))
            }
            _ => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub fitted: RelaxedCategorical,
    pub final_value: f64,
    /// Standard error of `final_value` for Monte-Carlo fits.
    pub final_std_error: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub trajectory: Option<Vec<(usize, f64)>>,
}

impl FitResult {
    pub fn probabilities(&self) -> Vec<f64> {
        self.fitted.probabilities()
    }
}

#[derive(Debug, Error)]
pub enum FitError {
    #[error(transparent)]
    Invalid(#[from] Error),
    /// A non-finite objective or gradient; `last_good` holds the last finite
    /// state, marked unconverged.
    #[error("fit diverged at iteration {iteration}")]
    Diverged {
        iteration: usize,
        last_good: Box<FitResult>,
    },
}

struct Evaluation {
    estimate: DivergenceEstimate,
    grad: Vec<f64>,
}

struct Objective<'a> {
    target: &'a RelaxedCategorical,
    temperature: f64,
    cfg: &'a FitConfig,
    rng: StreamRng,
    noise: Vec<f64>,
}

impl Objective<'_> {
    fn posterior(&self, log_logits: &[f64]) -> Result<RelaxedCategorical, Error> {
        RelaxedCategorical::new(log_logits.to_vec(), self.temperature)
    }

    fn value(&mut self, log_logits: &[f64]) -> Result<DivergenceEstimate, Error> {
        let q = self.posterior(log_logits)?;
        match self.cfg.estimator {
            Estimator::MonteCarlo => {
                fill_gumbel(&mut self.rng, &mut self.noise);
                monte_carlo_with_noise(&q, self.target, &self.noise)
            }
            Estimator::CategoricalApprox => kld_categorical_approx(&q, self.target),
            _ => recab(&q, self.target),
        }
    }

    fn evaluate(&mut self, log_logits: &[f64]) -> Result<Evaluation, Error> {
        let q = self.posterior(log_logits)?;
        match self.cfg.estimator {
            Estimator::MonteCarlo => {
                // One batch of draws shared by the value and every difference.
                fill_gumbel(&mut self.rng, &mut self.noise);
                let estimate = monte_carlo_with_noise(&q, self.target, &self.noise)?;
                let h = self.cfg.mc_fd_step;
                let mut shifted = log_logits.to_vec();
                let mut grad = Vec::with_capacity(log_logits.len());
                for j in 0..log_logits.len() {
                    shifted[j] = log_logits[j] + h;
                    let plus = monte_carlo_with_noise(
                        &self.posterior(&shifted)?,
                        self.target,
                        &self.noise,
                    )?;
                    shifted[j] = log_logits[j] - h;
                    let minus = monte_carlo_with_noise(
                        &self.posterior(&shifted)?,
                        self.target,
                        &self.noise,
                    )?;
                    shifted[j] = log_logits[j];
                    grad.push((plus.value - minus.value) / (2.0 * h));
                }
                Ok(Evaluation { estimate, grad })
            }
            Estimator::CategoricalApprox => Ok(Evaluation {
                estimate: kld_categorical_approx(&q, self.target)?,
                grad: kld_categorical_approx_grad(&q, self.target)?,
            }),
            _ => Ok(Evaluation {
                estimate: recab(&q, self.target)?,
                grad: recab_grad_posterior_log_logits(&q, self.target)?,
            }),
        }
    }
}

/// Minimizes `estimator(q || target)` over the posterior log-logits, starting
/// from `init`'s log-logits at the fixed `posterior_temperature`.
pub fn fit_posterior(
    target: &RelaxedCategorical,
    init: &RelaxedCategorical,
    posterior_temperature: f64,
    cfg: &FitConfig,
) -> Result<FitResult, FitError> {
    cfg.validate()?;
    check_temperature(posterior_temperature)?;
    ensure_same_len(target.dim(), init.dim())?;

    let n = target.dim();
    let mut objective = Objective {
        target,
        temperature: posterior_temperature,
        cfg,
        rng: seeded(cfg.seed),
        noise: vec![0.0; cfg.mc_samples * n],
    };
    let mut x = init.log_logits().to_vec();
    center_in_place(&mut x);

    let mut trajectory = cfg.record_trajectory.then(Vec::new);
    let mut last_good: Option<(Vec<f64>, DivergenceEstimate)> = None;
    let mut iterations = 0;
    let mut converged = false;

    let diverged = |iteration: usize,
                    last: &Option<(Vec<f64>, DivergenceEstimate)>,
                    trajectory: &Option<Vec<(usize, f64)>>|
     -> FitError {
        match last {
            Some((x, est)) => FitError::Diverged {
                iteration,
                last_good: Box::new(FitResult {
                    fitted: RelaxedCategorical::new(x.clone(), posterior_temperature)
                        .expect("last good state is finite"),
                    final_value: est.value,
                    final_std_error: est.std_error,
                    iterations: iteration,
                    converged: false,
                    trajectory: trajectory.clone(),
                }),
            },
            None => FitError::Invalid(Error::Domain(
                "objective is not finite at the initial point".into(),
            )),
        }
    };

    while iterations < cfg.max_iters {
        let eval = match objective.evaluate(&x) {
            Ok(e) if e.grad.iter().all(|g| g.is_finite()) => e,
            _ => return Err(diverged(iterations, &last_good, &trajectory)),
        };
        if let Some(t) = trajectory.as_mut() {
            t.push((iterations, eval.estimate.value));
        }
        last_good = Some((x.clone(), eval.estimate));
        let grad_norm = eval.grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if grad_norm < cfg.grad_tolerance {
            converged = true;
            break;
        }
        for (xi, gi) in x.iter_mut().zip(&eval.grad) {
            *xi -= cfg.step_size * gi;
        }
        center_in_place(&mut x);
        iterations += 1;
    }

    let final_estimate = if converged {
        last_good
            .as_ref()
            .map(|(_, e)| *e)
            .expect("evaluated at least once")
    } else {
        match objective.value(&x) {
            Ok(e) => e,
            Err(_) => return Err(diverged(iterations, &last_good, &trajectory)),
        }
    };
    if let (Some(t), false) = (trajectory.as_mut(), converged) {
        t.push((iterations, final_estimate.value));
    }

    Ok(FitResult {
        fitted: RelaxedCategorical::new(x, posterior_temperature)?,
        final_value: final_estimate.value,
        final_std_error: final_estimate.std_error,
        iterations,
        converged,
        trajectory,
    })
}
