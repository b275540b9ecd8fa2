//! Terms of the generalized Ito formula
//! `F(X_t, t) = F(X_e, e) + int_e^t F_x dX + int_e^t F_t ds - 1/2 int_e^t int F_x(x, s) L(dx, ds)`
//! and the residual left after moving everything to one side.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::stats::{mean, McSummary};
use crate::ito::weak::WeakDiffFunction;
use crate::lt_integral::{
    EpsilonExtension, EpsilonPlan, LtIntegralPlan, ProjectedLevels, RefinementSchedule, DEFAULT_EPS_SCHEDULE,
};
use crate::sim::{SamplePath, TimeGrid, TIME_TOL};

/// `sum_{t_i < t} h(x_i, t_i) (x_{i+1} - x_i)`.
pub fn ito_stochastic_integral(h: impl Fn(f64, f64) -> f64, path: &SamplePath, t: f64) -> Result<f64> {
    let end = path.grid.require_index(t)?;
    Ok(stochastic_sum(&h, path, 0, end))
}

/// `sum_{t_i < t} F_t(x_i, t_i) dt_i`.
pub fn time_integral_dt(f: &WeakDiffFunction, path: &SamplePath, t: f64) -> Result<f64> {
    let end = path.grid.require_index(t)?;
    Ok(time_sum(&|x, s| f.dt(x, s), path, 0, end))
}

pub(crate) fn stochastic_sum(h: &dyn Fn(f64, f64) -> f64, path: &SamplePath, from: usize, to: usize) -> f64 {
    let ts = path.times();
    (from..to)
        .map(|i| h(path.x[i], ts[i]) * (path.x[i + 1] - path.x[i]))
        .sum()
}

pub(crate) fn time_sum(h: &dyn Fn(f64, f64) -> f64, path: &SamplePath, from: usize, to: usize) -> f64 {
    let ts = path.times();
    (from..to).map(|i| h(path.x[i], ts[i]) * (ts[i + 1] - ts[i])).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
#[serde(default)]
pub struct ItoConfig {
    pub refinement: RefinementSchedule,
    /// Truncation levels for the `e -> 0` extension when the lower time is 0.
    /// Empty means integrating over `(0, t]` directly.
    pub eps_schedule: Vec<f64>,
}

impl Default for ItoConfig {
    fn default() -> Self {
        Self {
            refinement: RefinementSchedule::default(),
            eps_schedule: DEFAULT_EPS_SCHEDULE.to_vec(),
        }
    }
}

/// Per-path terms. `residual = terminal - initial - stochastic - time + local_time / 2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ItoTerms {
    pub terminal: f64,
    pub initial: f64,
    pub stochastic: f64,
    pub time: f64,
    /// `int int F_x dL` over the window.
    pub local_time: f64,
    pub residual: f64,
    pub extension: Option<EpsilonExtension>,
}

pub const TERM_NAMES: [&str; 5] = ["terminal", "initial", "stochastic", "time", "local_time"];

impl ItoTerms {
    fn new(terminal: f64, initial: f64, stochastic: f64, time: f64, local_time: f64) -> Self {
        let mut t = Self {
            terminal,
            initial,
            stochastic,
            time,
            local_time,
            residual: 0.0,
            extension: None,
        };
        t.residual = t.signed().iter().sum();
        t
    }

    /// Signed contributions, in [`TERM_NAMES`] order, summing to the residual.
    pub fn signed(&self) -> [f64; 5] {
        [
            self.terminal,
            -self.initial,
            -self.stochastic,
            -self.time,
            0.5 * self.local_time,
        ]
    }
}

#[derive(Debug, Clone)]
enum LocalTimeMode {
    Direct(LtIntegralPlan, ProjectedLevels),
    Extended(EpsilonPlan, Vec<ProjectedLevels>),
}

/// Everything about the formula that does not depend on the path: the
/// certificates, the window indices and the projections of `F_x`.
#[derive(Debug, Clone)]
pub struct ResidualPlan {
    f: WeakDiffFunction,
    steps: usize,
    mesh: f64,
    from: usize,
    to: usize,
    mode: LocalTimeMode,
}

impl ResidualPlan {
    /// Window `[e, t]`; for `e > 0` the window starts at the first grid point
    /// at or after `e`. For `e = 0` the local-time term comes from the
    /// extension over `config.eps_schedule`, or from `(0, t]` directly when
    /// the schedule is empty.
    pub fn new(f: &WeakDiffFunction, grid: &TimeGrid, t: f64, eps: f64, config: &ItoConfig) -> Result<Self> {
        f.certify()?;
        let to = grid.require_index(t)?;
        if !(eps >= 0.0 && eps < t) {
            return Err(Error::ConfigInvalid(format!("lower time {eps} must lie in [0, {t})")));
        }
        let from = if eps > 0.0 { grid.steps_before(eps) } else { 0 };
        let lo = grid.points()[from];
        let mesh = grid.mesh();
        let dx = f.dx_function();
        let mode = if from > 0 || config.eps_schedule.is_empty() {
            let plan = LtIntegralPlan::new(f.half_width(), (lo, t), &config.refinement, mesh)?;
            let proj = plan.project(&dx)?;
            LocalTimeMode::Direct(plan, proj)
        } else {
            let plan = EpsilonPlan::new(f.half_width(), t, &config.eps_schedule, &config.refinement, mesh)?;
            let proj = plan.project(&dx)?;
            LocalTimeMode::Extended(plan, proj)
        };
        Ok(Self {
            f: f.clone(),
            steps: grid.steps(),
            mesh,
            from,
            to,
            mode,
        })
    }

    pub fn function(&self) -> &WeakDiffFunction {
        &self.f
    }

    /// Grid indices `(start, end)` of the window.
    pub fn window(&self) -> (usize, usize) {
        (self.from, self.to)
    }

    pub fn evaluate(&self, path: &SamplePath) -> Result<ItoTerms> {
        if path.steps() != self.steps || path.grid.mesh() != self.mesh {
            return Err(Error::ConfigInvalid("path grid differs from the plan grid".into()));
        }
        let ts = path.times();
        let f = &self.f;
        let terminal = f.value(path.x[self.to], ts[self.to]);
        let initial = f.value(path.x[self.from], ts[self.from]);
        let stochastic = stochastic_sum(&|x, s| f.dx(x, s), path, self.from, self.to);
        let time = time_sum(&|x, s| f.dt(x, s), path, self.from, self.to);
        let (local_time, extension) = match &self.mode {
            LocalTimeMode::Direct(plan, proj) => {
                let field = plan.field(path, &[])?;
                let v = *plan.integrate(proj, &field)?.last().expect("plan has levels");
                if !v.is_finite() {
                    return Err(Error::NoConvergence("non-finite local-time integral".into()));
                }
                (v, None)
            }
            LocalTimeMode::Extended(plan, proj) => {
                let field = plan.field(path, &[])?;
                let ext = plan.evaluate(proj, &field)?;
                (ext.limit, Some(ext))
            }
        };
        let mut terms = ItoTerms::new(terminal, initial, stochastic, time, local_time);
        terms.extension = extension;
        Ok(terms)
    }
}

/// Monte Carlo view of many [`ItoTerms`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ItoReport {
    pub residuals: Vec<f64>,
    pub mean: f64,
    pub stderr: f64,
    pub max_abs: f64,
    /// Means of the signed terms, in [`TERM_NAMES`] order.
    pub term_means: [f64; 5],
    pub config: serde_json::Value,
}

impl ItoReport {
    pub fn from_terms(terms: &[ItoTerms], config: serde_json::Value) -> Result<Self> {
        let residuals: Vec<f64> = terms.iter().map(|t| t.residual).collect();
        let s = McSummary::from_samples(&residuals)?;
        let mut term_means = [0.0; 5];
        for (j, m) in term_means.iter_mut().enumerate() {
            *m = mean(&terms.iter().map(|t| t.signed()[j]).collect::<Vec<_>>());
        }
        Ok(Self {
            mean: s.mean,
            stderr: s.stderr,
            max_abs: s.max_abs(),
            residuals,
            term_means,
            config,
        })
    }
}

/// Per-path residual of the generalized Ito formula on `[e, t]`.
pub fn ito_residual(f: &WeakDiffFunction, path: &SamplePath, t: f64, eps: f64, config: &ItoConfig) -> Result<ItoTerms> {
    ResidualPlan::new(f, &path.grid, t, eps, config)?.evaluate(path)
}

/// Grid time of the window start used for lower time `eps`.
pub fn window_start(grid: &TimeGrid, eps: f64) -> f64 {
    if eps > TIME_TOL {
        grid.points()[grid.steps_before(eps)]
    } else {
        0.0
    }
}
