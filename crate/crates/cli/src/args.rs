//! Command-line flags.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use recab::Estimator;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "recab",
    version,
    about = "Relaxed categorical KL divergence sweeps, fits and bound checks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate estimators over a ternary grid of proposals against a target.
    Heatmap(HeatmapArgs),
    /// Fit a posterior's logits to a target by gradient descent.
    Fit(FitArgs),
    /// Check the closed-form bounds against Monte-Carlo on random pairs.
    VerifyBound(VerifyArgs),
    /// Draw samples from a relaxed categorical distribution.
    Sample(SampleArgs),
    /// Evaluate a ternary density on the interior grid.
    Density(DensityArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct HeatmapArgs {
    /// Positive target logits, comma-separated (three of them).
    #[arg(
        long,
        value_delimiter = ',',
        required = true,
        allow_hyphen_values = true
    )]
    pub target_logits: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub target_temp: f64,
    #[arg(long, default_value_t = 1.0)]
    pub proposal_temp: f64,
    #[arg(long, default_value_t = 100)]
    pub resolution: usize,
    /// Estimators to evaluate: any of mc, ca, recab, recab_lower.
    #[arg(long, value_delimiter = ',', default_value = "mc,ca,recab")]
    pub estimators: Vec<Estimator>,
    #[arg(long, default_value_t = 32)]
    pub mc_samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV output path; the manifest is written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    /// One of mc, ca, recab.
    #[arg(long)]
    pub estimator: Estimator,
    /// Positive target logits, comma-separated.
    #[arg(
        long,
        value_delimiter = ',',
        required = true,
        allow_hyphen_values = true
    )]
    pub target_logits: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub target_temp: f64,
    #[arg(long, default_value_t = 1.0)]
    pub posterior_temp: f64,
    /// Starting logits; uniform when omitted.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub init_logits: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.05)]
    pub step: f64,
    #[arg(long, default_value_t = 5000)]
    pub iters: usize,
    /// Stop once the largest gradient component falls below this.
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
    #[arg(long, default_value_t = 32)]
    pub mc_samples: usize,
    /// Central-difference step for Monte-Carlo gradients.
    #[arg(long, default_value_t = 1e-2)]
    pub fd_step: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Record the objective at every iteration.
    #[arg(long)]
    pub trace: bool,
    /// JSON output path; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 500)]
    pub trials: usize,
    /// Inclusive dimension range, written `lo..hi`.
    #[arg(long, default_value = "2..10", value_parser = parse_dims)]
    pub dims: (usize, usize),
    /// Temperature range `lo,hi`; temperatures are drawn log-uniformly.
    #[arg(long, default_value = "0.1,5", value_parser = parse_pair)]
    pub temp_range: (f64, f64),
    /// Log-logits are drawn uniformly from `[-spread, spread]`.
    #[arg(long, default_value_t = 2.0)]
    pub logit_spread: f64,
    #[arg(long, default_value_t = 10_000)]
    pub mc_samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON report path; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct DistributionArgs {
    /// Positive logits, comma-separated.
    #[arg(
        long,
        value_delimiter = ',',
        required = true,
        allow_hyphen_values = true
    )]
    pub logits: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub temp: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct SampleArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub dist: DistributionArgs,
    #[arg(long, default_value_t = 1000)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct DensityArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub dist: DistributionArgs,
    #[arg(long, default_value_t = 100)]
    pub resolution: usize,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| format!("expected a range like 2..10, got '{s}'"))?;
    let parse = |v: &str| {
        v.trim()
            .parse::<usize>()
            .map_err(|e| format!("bad dimension '{v}': {e}"))
    };
    let hi = hi.strip_prefix('=').unwrap_or(hi);
    Ok((parse(lo)?, parse(hi)?))
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(',')
        .ok_or_else(|| format!("expected two comma-separated numbers, got '{s}'"))?;
    let parse = |v: &str| {
        v.trim()
            .parse::<f64>()
            .map_err(|e| format!("bad number '{v}': {e}"))
    };
    Ok((parse(lo)?, parse(hi)?))
}
