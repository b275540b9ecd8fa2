//! Monte Carlo summaries with order-fixed reductions.
//!
//! Per-path values are always collected in path-index order and reduced by a
//! fixed binary tree, so a summary depends only on the sample, never on how
//! many workers produced it.

use serde::Serialize;

use crate::error::{Error, Result};

/// Pairwise (tree) sum in a fixed order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if v.len() <= LEAF {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

pub fn mean(v: &[f64]) -> f64 {
    pairwise_sum(v) / v.len() as f64
}

/// One row of a per-level convergence table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub label: String,
    pub mean: f64,
    pub stderr: f64,
    /// `|mean - previous mean|`, absent on the first row.
    pub increment: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McSummary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation over `sqrt(n)`.
    pub stderr: f64,
    /// `mean -/+ 1.96 stderr`.
    pub ci95: (f64, f64),
    pub min: f64,
    pub max: f64,
    pub rows: Vec<ConvergenceRow>,
}

impl McSummary {
    pub fn from_samples(v: &[f64]) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::EmptySample);
        }
        let n = v.len();
        let m = mean(v);
        let dev: Vec<f64> = v.iter().map(|x| (x - m) * (x - m)).collect();
        let var = if n > 1 {
            pairwise_sum(&dev) / (n - 1) as f64
        } else {
            0.0
        };
        let stderr = (var / n as f64).sqrt();
        Ok(Self {
            n,
            mean: m,
            stderr,
            ci95: (m - 1.96 * stderr, m + 1.96 * stderr),
            min: v.iter().copied().fold(f64::INFINITY, f64::min),
            max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            rows: Vec::new(),
        })
    }

    pub fn with_rows(mut self, rows: Vec<ConvergenceRow>) -> Self {
        self.rows = rows;
        self
    }

    /// Largest absolute sample value.
    pub fn max_abs(&self) -> f64 {
        self.min.abs().max(self.max.abs())
    }
}

/// Builds convergence rows from per-level samples (`levels[j][path]`).
pub fn convergence_rows(labels: &[String], levels: &[Vec<f64>]) -> Result<Vec<ConvergenceRow>> {
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(levels.len());
    for (label, samples) in labels.iter().zip(levels) {
        let s = McSummary::from_samples(samples)?;
        let increment = rows.last().map(|r| (s.mean - r.mean).abs());
        rows.push(ConvergenceRow {
            label: label.clone(),
            mean: s.mean,
            stderr: s.stderr,
            increment,
        });
    }
    Ok(rows)
}

/// Sample correlation of paired values.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let cov: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).collect();
    let va: Vec<f64> = a.iter().map(|x| (x - ma) * (x - ma)).collect();
    let vb: Vec<f64> = b.iter().map(|y| (y - mb) * (y - mb)).collect();
    pairwise_sum(&cov) / (pairwise_sum(&va) * pairwise_sum(&vb)).sqrt()
}

/// Least-squares slope of `y` on `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let sxy: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    let sxx: Vec<f64> = x.iter().map(|a| (a - mx) * (a - mx)).collect();
    pairwise_sum(&sxy) / pairwise_sum(&sxx)
}
