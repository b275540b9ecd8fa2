use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::harness::seed::path_rng;
use crate::sim::grid::TimeGrid;
use crate::sim::integrand::IntegrandSpec;

/// One discretized trajectory of `(W, u, X)`.
#[derive(Debug, Clone)]
pub struct SamplePath {
    pub grid: Arc<TimeGrid>,
    pub w: Vec<f64>,
    pub u: Vec<f64>,
    pub x: Vec<f64>,
    /// `u_i^2 * dt_i` for each step.
    pub qv_increments: Vec<f64>,
    pub seed: u64,
}

impl SamplePath {
    pub fn times(&self) -> &[f64] {
        self.grid.points()
    }

    pub fn steps(&self) -> usize {
        self.grid.steps()
    }

    /// `sum_i (x_{i+1} - x_i)^2` over the whole path.
    pub fn realized_variation(&self) -> f64 {
        self.x.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum()
    }

    /// `sum_i u_i^2 dt_i` over the whole path.
    pub fn quadratic_variation(&self) -> f64 {
        self.qv_increments.iter().sum()
    }

    /// Running quadratic variation at every grid point.
    pub fn cumulative_qv(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.x.len());
        let mut acc = 0.0;
        out.push(0.0);
        for q in &self.qv_increments {
            acc += q;
            out.push(acc);
        }
        out
    }

    /// Path value at the nearest grid point at or before `t`.
    pub fn x_at(&self, t: f64) -> f64 {
        self.x[self.grid.index_at_or_before(t)]
    }
}

/// Simulate `X_t = int u dW` with the left-endpoint Euler rule.
pub fn simulate_path(spec: &IntegrandSpec, grid: Arc<TimeGrid>, seed: u64) -> Result<SamplePath> {
    let n = grid.steps();
    let mut rng = path_rng(seed);
    let mut w = Vec::with_capacity(n + 1);
    let mut u = Vec::with_capacity(n + 1);
    let mut x = Vec::with_capacity(n + 1);
    let mut qv = Vec::with_capacity(n);
    w.push(0.0);
    x.push(0.0);
    let times = grid.points();
    for i in 0..n {
        let ui = spec.eval(times[i], &w);
        spec.check_bounds(times[i], ui)?;
        let dt = times[i + 1] - times[i];
        let z: f64 = rng.sample(StandardNormal);
        let dw = dt.sqrt() * z;
        w.push(w[i] + dw);
        x.push(x[i] + ui * dw);
        u.push(ui);
        qv.push(ui * ui * dt);
    }
    let last = spec.eval(times[n], &w);
    spec.check_bounds(times[n], last)?;
    u.push(last);
    Ok(SamplePath {
        grid,
        w,
        u,
        x,
        qv_increments: qv,
        seed,
    })
}

/// Value of `X` at grid index `index`, drawing exactly the same random
/// numbers as [`simulate_path`] up to that point.
pub fn simulate_value_at(spec: &IntegrandSpec, grid: &TimeGrid, seed: u64, index: usize) -> Result<f64> {
    let mut rng = path_rng(seed);
    let times = grid.points();
    let mut x = 0.0;
    if let Some(sigma) = spec.is_constant() {
        for i in 0..index {
            let z: f64 = rng.sample(StandardNormal);
            x += sigma * ((times[i + 1] - times[i]).sqrt() * z);
        }
        return Ok(x);
    }
    let mut w = Vec::with_capacity(index + 1);
    w.push(0.0);
    for i in 0..index {
        let ui = spec.eval(times[i], &w);
        spec.check_bounds(times[i], ui)?;
        let z: f64 = rng.sample(StandardNormal);
        let dw = (times[i + 1] - times[i]).sqrt() * z;
        w.push(w[i] + dw);
        x += ui * dw;
    }
    Ok(x)
}
