//! Relaxed categorical (Gumbel-softmax) distributions and estimators of the
//! KL divergence between them.
//!
//! Three estimators are provided:
//!
//! - [`kld_monte_carlo`]: sample average of `log q(z) - log p(z)` over
//!   reparameterized draws, with its standard error.
//! - [`kld_categorical_approx`]: the KL divergence of the underlying
//!   categoricals, which ignores both temperatures.
//! - [`recab`]: a closed-form upper bound, together with its lower-bound
//!   counterpart [`recab_lower_bound`] and the logit-free gap [`recab_gap`].
//!
//! The [`fit`] and [`grid`] modules drive these estimators for posterior
//! fitting and ternary heatmaps; [`verify`] checks the bounds against
//! Monte-Carlo on random instances.

pub mod divergence;
pub mod error;
pub mod fit;
pub mod gaussian;
pub mod grid;
mod kernel;
pub mod objective;
pub mod prior;
pub mod relaxed;
pub mod rng;
pub mod special;
pub mod verify;

pub use divergence::{
    evaluate_closed_form, kld_categorical_approx, kld_categorical_approx_grad, kld_monte_carlo,
    recab, recab_constant_term, recab_gap, recab_grad_posterior_log_logits, recab_logit_term,
    recab_lower_bound, DivergenceEstimate, Estimator, TemperatureRatio,
};
pub use error::{Error, Result};
pub use fit::{fit_posterior, FitConfig, FitError, FitResult};
pub use gaussian::{gaussian_kld, gaussian_kld_between, DiagonalGaussian};
pub use grid::{
    density_grid, heatmap_sweep, simplex_grid, DensityCell, DensityGrid, HeatmapCell, HeatmapGrid,
};
pub use objective::{joint_objective, joint_objective_terms, ObjectiveTerms};
pub use prior::{discriminative_logits, make_discriminative_prior, OneHotCode, DEFAULT_EPSILON};
pub use relaxed::{
    gumbel_from_uniform, log_density, log_density_at_log_coords, reparameterize, sample,
    sample_standard_gumbel, GumbelVector, RelaxedCategorical, SimplexPoint,
};
pub use special::{digamma_positive_integer, harmonic, log_gamma, EULER_GAMMA};
pub use verify::{verify_bounds, VerifyConfig, VerifyReport};
