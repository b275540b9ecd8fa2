//! Quadratic covariation `[f(X, .), X]_t` along refining partitions.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::partitions::{validate_condition_m, PartitionSequence};
use crate::sim::{SamplePath, TimeGrid, TIME_TOL};

/// Largest ratio constant accepted for covariation sequences.
pub const RATIO_CAP: f64 = 16.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovariationEstimate {
    /// `(mesh, sum)` for each member of the sequence, coarse to fine.
    pub levels: Vec<(f64, f64)>,
    /// Finest-level sum.
    pub limit: f64,
    /// `|limit - second finest|`, 0 for a single level.
    pub last_increment: f64,
}

/// Grid indices and times of every partition interval, computed once per
/// (sequence, grid, t) and reused across paths.
#[derive(Debug, Clone)]
pub struct CovariationPlan {
    meshes: Vec<f64>,
    /// Per level: `(index_a, index_b, a, b)` for each interval meeting `[0, t)`.
    intervals: Vec<Vec<(usize, usize, f64, f64)>>,
    steps: usize,
}

impl CovariationPlan {
    pub fn new(seq: &PartitionSequence, grid: &TimeGrid, t: f64) -> Result<Self> {
        validate_condition_m(seq, RATIO_CAP).map_err(|e| Error::PartitionInvalid(e.to_string()))?;
        let path_mesh = grid.mesh();
        let finest = seq.finest().mesh();
        if finest < path_mesh * (1.0 - 1e-9) {
            return Err(Error::PartitionFinerThanPath {
                partition_mesh: finest,
                path_mesh,
            });
        }
        let intervals = seq
            .family()
            .iter()
            .map(|p| {
                p.points()
                    .windows(2)
                    .take_while(|w| w[0] < t - TIME_TOL)
                    .map(|w| {
                        let (a, b) = (w[0], w[1].min(t));
                        (grid.index_at_or_before(a), grid.index_at_or_before(b), a, b)
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            meshes: seq.mesh_profile().to_vec(),
            intervals,
            steps: grid.steps(),
        })
    }

    pub fn evaluate(&self, f: impl Fn(f64, f64) -> f64, path: &SamplePath) -> Result<CovariationEstimate> {
        if path.steps() != self.steps {
            return Err(Error::ConfigInvalid(
                "path grid differs from the covariation plan".into(),
            ));
        }
        let levels: Vec<(f64, f64)> = self
            .meshes
            .iter()
            .zip(&self.intervals)
            .map(|(&mesh, iv)| {
                let sum = iv
                    .iter()
                    .map(|&(ia, ib, a, b)| {
                        let (xa, xb) = (path.x[ia], path.x[ib]);
                        (f(xb, b) - f(xa, a)) * (xb - xa)
                    })
                    .sum();
                (mesh, sum)
            })
            .collect();
        let n = levels.len();
        let limit = levels.last().map(|l| l.1).unwrap_or(0.0);
        let last_increment = if n > 1 { (limit - levels[n - 2].1).abs() } else { 0.0 };
        Ok(CovariationEstimate {
            levels,
            limit,
            last_increment,
        })
    }

    /// `sum_i F(X_{p_{i+1}}, p_{i+1}) - F(X_{p_{i+1}}, p_i)` on the finest level.
    pub fn forward_time_sum(&self, f: impl Fn(f64, f64) -> f64, path: &SamplePath) -> Result<f64> {
        if path.steps() != self.steps {
            return Err(Error::ConfigInvalid(
                "path grid differs from the covariation plan".into(),
            ));
        }
        let finest = self.intervals.last().expect("sequences are non-empty");
        Ok(finest
            .iter()
            .map(|&(_, ib, a, b)| {
                let xb = path.x[ib];
                f(xb, b) - f(xb, a)
            })
            .sum())
    }
}

/// `sum_i (f(X_{p_{i+1}}, p_{i+1}) - f(X_{p_i}, p_i)) (X_{p_{i+1}} - X_{p_i})`
/// over each partition restricted to `[0, t]`. Partition points are mapped to
/// the nearest grid point at or before them.
pub fn quadratic_covariation(
    f: impl Fn(f64, f64) -> f64,
    path: &SamplePath,
    seq: &PartitionSequence,
    t: f64,
) -> Result<CovariationEstimate> {
    CovariationPlan::new(seq, &path.grid, t)?.evaluate(f, path)
}

/// Forward time sum `sum_i F(X_{p_{i+1}}, p_{i+1}) - F(X_{p_{i+1}}, p_i)` over
/// the finest partition of `seq` restricted to `[0, t]`.
pub fn time_integral_f(f: impl Fn(f64, f64) -> f64, path: &SamplePath, seq: &PartitionSequence, t: f64) -> Result<f64> {
    CovariationPlan::new(seq, &path.grid, t)?.forward_time_sum(f, path)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::partitions::{make_partition_sequence, PartitionKind};
    use crate::sim::{simulate_path, IntegrandSpec, TimeGrid};

    #[test]
    fn identity_gives_realized_variation() {
        let spec = IntegrandSpec::constant(1.0).unwrap();
        let path = simulate_path(&spec, Arc::new(TimeGrid::uniform(1024).unwrap()), 5).unwrap();
        let seq = make_partition_sequence(PartitionKind::Uniform, 10).unwrap();
        let c = quadratic_covariation(|x, _| x, &path, &seq, 1.0).unwrap();
        assert!((c.limit - path.realized_variation()).abs() < 1e-12);
        let k = quadratic_covariation(|_, _| 2.0, &path, &seq, 1.0).unwrap();
        assert!(k.levels.iter().all(|l| l.1 == 0.0));
        let seq = make_partition_sequence(PartitionKind::Uniform, 11).unwrap();
        assert!(matches!(
            quadratic_covariation(|x, _| x, &path, &seq, 1.0),
            Err(Error::PartitionFinerThanPath { .. })
        ));
    }

    #[test]
    fn forward_time_sums() {
        let spec = IntegrandSpec::constant(1.0).unwrap();
        let path = simulate_path(&spec, Arc::new(TimeGrid::uniform(4096).unwrap()), 6).unwrap();
        let seq = make_partition_sequence(PartitionKind::GeometricDyadic, 12).unwrap();
        let g = time_integral_f(|_, t| t * t, &path, &seq, 1.0).unwrap();
        assert!((g - 1.0).abs() < 1e-12);
        assert_eq!(time_integral_f(|x, _| x, &path, &seq, 1.0).unwrap(), 0.0);
        let seq = make_partition_sequence(PartitionKind::Uniform, 12).unwrap();
        let v = time_integral_f(|x, t| t * x, &path, &seq, 1.0).unwrap();
        let ts = path.times();
        let trap: f64 = (0..path.steps())
            .map(|i| 0.5 * (path.x[i] + path.x[i + 1]) * (ts[i + 1] - ts[i]))
            .sum();
        assert!((v - trap).abs() <= 0.01 * trap.abs().max(0.1), "{v} vs {trap}");
    }
}
