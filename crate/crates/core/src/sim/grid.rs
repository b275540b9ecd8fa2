use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when matching a requested time against grid points.
pub const TIME_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StepProfile {
    Uniform,
    /// Consecutive steps grow by a constant factor.
    Geometric {
        ratio: f64,
    },
    Custom,
}

/// Simulation grid on [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    points: Vec<f64>,
    profile: StepProfile,
}

impl TimeGrid {
    pub fn uniform(steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidGrid("at least one step required".into()));
        }
        let n = steps as f64;
        let points = (0..=steps).map(|i| i as f64 / n).collect();
        Ok(Self {
            points,
            profile: StepProfile::Uniform,
        })
    }

    /// Steps h_i = h_0 * ratio^i scaled to sum to one.
    pub fn geometric(steps: usize, ratio: f64) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidGrid("at least one step required".into()));
        }
        if !(ratio.is_finite() && ratio > 0.0) {
            return Err(Error::InvalidGrid(format!("bad ratio {ratio}")));
        }
        let raw: Vec<f64> = (0..steps).map(|i| ratio.powi(i as i32)).collect();
        let total: f64 = raw.iter().sum();
        let mut points = Vec::with_capacity(steps + 1);
        let mut acc = 0.0;
        points.push(0.0);
        for h in &raw[..steps - 1] {
            acc += h / total;
            points.push(acc);
        }
        points.push(1.0);
        let grid = Self {
            points,
            profile: StepProfile::Geometric { ratio },
        };
        grid.check()?;
        Ok(grid)
    }

    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        let grid = Self {
            points,
            profile: StepProfile::Custom,
        };
        grid.check()?;
        Ok(grid)
    }

    fn check(&self) -> Result<()> {
        let p = &self.points;
        if p.len() < 2 {
            return Err(Error::InvalidGrid("need at least two points".into()));
        }
        if p[0] != 0.0 || p[p.len() - 1] != 1.0 {
            return Err(Error::InvalidGrid("grid must start at 0 and end at 1".into()));
        }
        if p.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid("points must be strictly increasing".into()));
        }
        Ok(())
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn profile(&self) -> StepProfile {
        self.profile
    }

    pub fn steps(&self) -> usize {
        self.points.len() - 1
    }

    pub fn dt(&self, i: usize) -> f64 {
        self.points[i + 1] - self.points[i]
    }

    pub fn mesh(&self) -> f64 {
        self.points.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Index of the grid point equal to `t` (within [`TIME_TOL`]).
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let i = self.index_at_or_before(t);
        if (self.points[i] - t).abs() <= TIME_TOL {
            return Some(i);
        }
        if i + 1 < self.points.len() && (self.points[i + 1] - t).abs() <= TIME_TOL {
            return Some(i + 1);
        }
        None
    }

    pub fn require_index(&self, t: f64) -> Result<usize> {
        self.index_of(t).ok_or(Error::OffGridTime(t))
    }

    /// Largest index with `t_i <= t` (nearest-left point); clamps to the ends.
    pub fn index_at_or_before(&self, t: f64) -> usize {
        let k = self.points.partition_point(|&p| p <= t + TIME_TOL);
        k.saturating_sub(1)
    }

    /// Number of steps whose left endpoint lies strictly before `t`.
    pub fn steps_before(&self, t: f64) -> usize {
        let k = self.points[..self.steps()].partition_point(|&p| p < t - TIME_TOL);
        k.min(self.steps())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_endpoints_and_mesh() {
        let g = TimeGrid::uniform(16).unwrap();
        assert_eq!(g.points()[0], 0.0);
        assert_eq!(*g.points().last().unwrap(), 1.0);
        assert_eq!(g.mesh(), 1.0 / 16.0);
        assert_eq!(g.index_of(0.25), Some(4));
        assert_eq!(g.index_of(0.26), None);
        assert_eq!(g.steps_before(0.25), 4);
        assert_eq!(g.steps_before(0.26), 5);
        assert_eq!(g.steps_before(1.0), 16);
        assert_eq!(g.index_at_or_before(0.26), 4);
    }

    #[test]
    fn geometric_grid_is_valid() {
        let g = TimeGrid::geometric(50, 1.05).unwrap();
        assert_eq!(g.steps(), 50);
        assert!(g.dt(49) > g.dt(0));
    }

    #[test]
    fn rejects_bad_points() {
        assert!(TimeGrid::from_points(vec![0.0, 0.5, 0.5, 1.0]).is_err());
        assert!(TimeGrid::from_points(vec![0.1, 1.0]).is_err());
        assert!(TimeGrid::uniform(0).is_err());
    }
}
