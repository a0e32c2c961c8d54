//! Ternary simplex grids: divergence heatmaps and density rasters.

use serde::{Deserialize, Serialize};

use crate::divergence::{evaluate_closed_form, kld_monte_carlo, DivergenceEstimate, Estimator};
use crate::error::{Error, Result};
use crate::relaxed::{log_density_at_log_coords, RelaxedCategorical};
use crate::rng::substream;

/// Interior lattice points `(i, j, k) / R` with `i + j + k = R` and all of
/// `i, j, k >= 1`, in lexicographic order.
pub fn simplex_grid(resolution: usize) -> Result<Vec<[f64; 3]>> {
    if resolution < 3 {
        return Err(Error::Parameter(format!(
            "grid resolution must be at least 3, got {resolution}"
        )));
    }
    let r = resolution as f64;
    let mut points = Vec::with_capacity((resolution - 1) * (resolution - 2) / 2);
    for i in 1..=resolution - 2 {
        for j in 1..=resolution - 1 - i {
            let k = resolution - i - j;
            points.push([i as f64 / r, j as f64 / r, k as f64 / r]);
        }
    }
    Ok(points)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapCell {
    /// Normalized proposal logits.
    pub coords: [f64; 3],
    /// One estimate per entry of [`HeatmapGrid::estimators`].
    pub estimates: Vec<DivergenceEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapGrid {
    pub resolution: usize,
    pub estimators: Vec<Estimator>,
    pub cells: Vec<HeatmapCell>,
}

impl HeatmapGrid {
    /// Per-cell estimates for one estimator, in grid order.
    pub fn column(&self, estimator: Estimator) -> Option<Vec<DivergenceEstimate>> {
        let idx = self.estimators.iter().position(|&e| e == estimator)?;
        Some(self.cells.iter().map(|c| c.estimates[idx]).collect())
    }
}

fn require_ternary(params: &RelaxedCategorical) -> Result<()> {
    if params.dim() != 3 {
        return Err(Error::UnsupportedDimension(params.dim()));
    }
    Ok(())
}

/// Evaluates `KL(proposal || target)` for every interior grid cell, where the
/// proposal has log-logits `ln b` for barycentric coordinates `b`.
///
/// Monte-Carlo cells draw from [`substream`]`(seed, cell_index)`.
pub fn heatmap_sweep(
    target: &RelaxedCategorical,
    proposal_temperature: f64,
    resolution: usize,
    estimators: &[Estimator],
    mc_samples: usize,
    seed: u64,
) -> Result<HeatmapGrid> {
    require_ternary(target)?;
    if estimators.is_empty() {
        return Err(Error::Parameter("no estimators requested".into()));
    }
    let points = simplex_grid(resolution)?;
    let mut cells = Vec::with_capacity(points.len());
    for (index, coords) in points.into_iter().enumerate() {
        let proposal = RelaxedCategorical::from_logits(&coords, proposal_temperature)?;
        let estimates = estimators
            .iter()
            .map(|&e| match e {
                Estimator::MonteCarlo => {
                    let mut rng = substream(seed, index as u64);
                    kld_monte_carlo(&proposal, target, mc_samples, &mut rng)
                }
                _ => evaluate_closed_form(e, &proposal, target),
            })
            .collect::<Result<Vec<_>>>()?;
        cells.push(HeatmapCell { coords, estimates });
    }
    Ok(HeatmapGrid {
        resolution,
        estimators: estimators.to_vec(),
        cells,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCell {
    pub coords: [f64; 3],
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub resolution: usize,
    pub cells: Vec<DensityCell>,
}

impl DensityGrid {
    /// The cell with the largest density.
    pub fn mode(&self) -> Option<&DensityCell> {
        self.cells
            .iter()
            .max_by(|a, b| a.density.total_cmp(&b.density))
    }
}

/// `exp(log_density)` at every interior grid cell.
pub fn density_grid(params: &RelaxedCategorical, resolution: usize) -> Result<DensityGrid> {
    require_ternary(params)?;
    let cells = simplex_grid(resolution)?
        .into_iter()
        .map(|coords| {
            let log_z = coords.map(f64::ln);
            let density = log_density_at_log_coords(params, &log_z)?.exp();
            Ok(DensityCell { coords, density })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DensityGrid { resolution, cells })
}
