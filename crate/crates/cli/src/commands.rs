//! One function per subcommand.

use std::time::Instant;

use recab::rng::seeded;
use recab::{
    density_grid, fit_posterior, heatmap_sweep, sample, verify_bounds, FitConfig, FitError,
    FitResult, RelaxedCategorical, VerifyConfig,
};
use serde::Serialize;

use crate::args::{DensityArgs, FitArgs, HeatmapArgs, SampleArgs, VerifyArgs};
use crate::output::{float, sidecar_path, write_csv, write_json, RunManifest};
use crate::CliError;

fn distribution(logits: &[f64], temp: f64, what: &str) -> Result<RelaxedCategorical, CliError> {
    RelaxedCategorical::from_logits(logits, temp)
        .map_err(|e| CliError::Usage(format!("{what}: {e}")))
}

fn write_manifest(out: &std::path::Path, manifest: &RunManifest) -> Result<(), CliError> {
    write_json(Some(&sidecar_path(out)), manifest)?;
    Ok(())
}

pub fn heatmap(args: &HeatmapArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let target = distribution(&args.target_logits, args.target_temp, "target")?;
    let grid = heatmap_sweep(
        &target,
        args.proposal_temp,
        args.resolution,
        &args.estimators,
        args.mc_samples,
        args.seed,
    )
    .map_err(|e| CliError::Usage(e.to_string()))?;

    let rows = grid.cells.iter().flat_map(|cell| {
        let [b1, b2, b3] = cell.coords.map(float);
        cell.estimates.iter().map(move |e| {
            let se = e.std_error.map(float).unwrap_or_default();
            format!("{b1},{b2},{b3},{},{},{se}", e.estimator, float(e.value))
        })
    });
    write_csv(&args.out, "b1,b2,b3,estimator,value,std_error", rows)?;
    write_manifest(
        &args.out,
        &RunManifest::new("heatmap", args, Some(args.seed), start.elapsed()),
    )
}

#[derive(Serialize)]
struct FitOutput<'a> {
    manifest: RunManifest,
    estimator: recab::Estimator,
    /// Fitted logits normalized to the simplex.
    fitted_logits: Vec<f64>,
    fitted_log_logits: &'a [f64],
    posterior_temperature: f64,
    final_value: f64,
    final_std_error: Option<f64>,
    iterations: usize,
    converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    trajectory: Option<&'a [(usize, f64)]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    diverged_at: Option<usize>,
}

pub fn fit(args: &FitArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let target = distribution(&args.target_logits, args.target_temp, "target")?;
    let init = match &args.init_logits {
        Some(logits) => distribution(logits, args.posterior_temp, "init")?,
        None => RelaxedCategorical::uniform(target.dim(), args.posterior_temp)
            .map_err(|e| CliError::Usage(e.to_string()))?,
    };
    let cfg = FitConfig {
        estimator: args.estimator,
        step_size: args.step,
        max_iters: args.iters,
        grad_tolerance: args.tol,
        mc_samples: args.mc_samples,
        mc_fd_step: args.fd_step,
        seed: args.seed,
        record_trajectory: args.trace,
    };
    let (result, diverged_at): (FitResult, _) =
        match fit_posterior(&target, &init, args.posterior_temp, &cfg) {
            Ok(r) => (r, None),
            Err(FitError::Diverged {
                iteration,
                last_good,
            }) => (*last_good, Some(iteration)),
            Err(FitError::Invalid(e)) => return Err(CliError::Usage(e.to_string())),
        };

    let output = FitOutput {
        manifest: RunManifest::new("fit", args, Some(args.seed), start.elapsed()),
        estimator: args.estimator,
        fitted_logits: result.probabilities(),
        fitted_log_logits: result.fitted.log_logits(),
        posterior_temperature: args.posterior_temp,
        final_value: result.final_value,
        final_std_error: result.final_std_error,
        iterations: result.iterations,
        converged: result.converged,
        trajectory: result.trajectory.as_deref(),
        diverged_at,
    };
    write_json(args.out.as_deref(), &output)?;
    match diverged_at {
        Some(i) => Err(CliError::Numerical(format!(
            "fit diverged at iteration {i}; last finite state written"
        ))),
        None => Ok(()),
    }
}

#[derive(Serialize)]
struct VerifyOutput {
    manifest: RunManifest,
    passed: bool,
    report: recab::VerifyReport,
}

pub fn verify_bound(args: &VerifyArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let cfg = VerifyConfig {
        trials: args.trials,
        min_dim: args.dims.0,
        max_dim: args.dims.1,
        temp_range: args.temp_range,
        logit_spread: args.logit_spread,
        mc_samples: args.mc_samples,
        seed: args.seed,
    };
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let report = verify_bounds(&cfg).map_err(|e| CliError::Numerical(e.to_string()))?;
    let passed = report.passed();
    let violations = report.violations.len();
    let output = VerifyOutput {
        manifest: RunManifest::new("verify-bound", args, Some(args.seed), start.elapsed()),
        passed,
        report,
    };
    write_json(args.out.as_deref(), &output)?;
    if passed {
        Ok(())
    } else {
        Err(CliError::Numerical(format!(
            "{violations} bound violations in {} trials",
            args.trials
        )))
    }
}

pub fn sample_cmd(args: &SampleArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let params = distribution(&args.dist.logits, args.dist.temp, "distribution")?;
    let mut rng = seeded(args.seed);
    let mut rows = Vec::with_capacity(args.count);
    for _ in 0..args.count {
        let z = sample(&params, &mut rng).map_err(|e| CliError::Numerical(e.to_string()))?;
        rows.push(
            z.coords()
                .iter()
                .map(|&v| float(v))
                .collect::<Vec<_>>()
                .join(","),
        );
    }
    let header = (1..=params.dim())
        .map(|i| format!("z{i}"))
        .collect::<Vec<_>>()
        .join(",");
    write_csv(&args.out, &header, rows)?;
    write_manifest(
        &args.out,
        &RunManifest::new("sample", args, Some(args.seed), start.elapsed()),
    )
}

pub fn density(args: &DensityArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let params = distribution(&args.dist.logits, args.dist.temp, "distribution")?;
    let grid =
        density_grid(&params, args.resolution).map_err(|e| CliError::Usage(e.to_string()))?;
    let rows = grid.cells.iter().map(|cell| {
        let [b1, b2, b3] = cell.coords.map(float);
        format!("{b1},{b2},{b3},{}", float(cell.density))
    });
    write_csv(&args.out, "b1,b2,b3,density", rows)?;
    write_manifest(
        &args.out,
        &RunManifest::new("density", args, None, start.elapsed()),
    )
}
