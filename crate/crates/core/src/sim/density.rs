use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::seed::split_seed;
use crate::sim::grid::TimeGrid;
use crate::sim::integrand::IntegrandSpec;
use crate::sim::path::simulate_value_at;

/// Histogram estimate of the density of `X_t`.
#[derive(Debug, Clone, Serialize)]
pub struct DensityEstimate {
    pub t: f64,
    pub n_paths: usize,
    pub edges: Vec<f64>,
    pub density: Vec<f64>,
    pub max_density: f64,
}

impl DensityEstimate {
    /// `max_density * sqrt(t)`; bounded by a single constant for nondegenerate `X`.
    pub fn scaled_peak(&self) -> f64 {
        self.max_density * self.t.sqrt()
    }
}

/// Bin `samples` over `mean +/- 5 sd` and normalize by the full sample size.
pub fn histogram_density(samples: &[f64], bins: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    if bins == 0 {
        return Err(Error::ConfigInvalid("bins must be positive".into()));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let half = 5.0 * var.sqrt().max(f64::MIN_POSITIVE);
    let lo = mean - half;
    let width = 2.0 * half / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|b| lo + b as f64 * width).collect();
    let mut counts = vec![0usize; bins];
    for &v in samples {
        let pos = (v - lo) / width;
        if pos >= 0.0 && pos < bins as f64 {
            counts[pos as usize] += 1;
        }
    }
    let density = counts.iter().map(|&c| c as f64 / (n * width)).collect();
    Ok((edges, density))
}

/// Histogram of `X_t` over `n_paths` independent paths seeded from `master_seed`.
pub fn empirical_density_bound(
    spec: &IntegrandSpec,
    grid: &TimeGrid,
    t: f64,
    n_paths: usize,
    bins: usize,
    master_seed: u64,
) -> Result<DensityEstimate> {
    if t <= 0.0 {
        return Err(Error::DegenerateTime);
    }
    if n_paths == 0 {
        return Err(Error::EmptySample);
    }
    let index = grid.require_index(t)?;
    let samples = (0..n_paths)
        .into_par_iter()
        .map(|i| simulate_value_at(spec, grid, split_seed(master_seed, i as u64), index))
        .collect::<Result<Vec<f64>>>()?;
    let (edges, density) = histogram_density(&samples, bins)?;
    let max_density = density.iter().copied().fold(0.0, f64::max);
    Ok(DensityEstimate {
        t,
        n_paths,
        edges,
        density,
        max_density,
    })
}
