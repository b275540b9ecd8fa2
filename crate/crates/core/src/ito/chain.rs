//! Approximation chain: the classical Ito formula for mollified `F_n`,
//! term by term against the generalized formula for `F`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ito::formula::{stochastic_sum, time_sum, ItoConfig, ItoTerms, ResidualPlan};
use crate::ito::mollifier::{mollify, BaseKernel, LatticeSpec, MollifiedFunction, MollifierKernel};
use crate::ito::weak::WeakDiffFunction;
use crate::sim::SamplePath;

/// Classical Ito terms of a smooth `F_n` on a window of grid indices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmoothTerms {
    pub terminal: f64,
    pub initial: f64,
    pub stochastic: f64,
    pub time: f64,
    /// `1/2 sum F_n''(x_i, t_i) u_i^2 dt_i`.
    pub second_order: f64,
    /// `terminal - initial - stochastic - time - second_order`.
    pub residual: f64,
}

impl SmoothTerms {
    pub fn compute(fn_: &MollifiedFunction, path: &SamplePath, from: usize, to: usize) -> Self {
        let ts = path.times();
        let terminal = fn_.value(path.x[to], ts[to]);
        let initial = fn_.value(path.x[from], ts[from]);
        let stochastic = stochastic_sum(&|x, s| fn_.dx(x, s), path, from, to);
        let time = time_sum(&|x, s| fn_.dt(x, s), path, from, to);
        let second_order = 0.5
            * (from..to)
                .map(|i| fn_.dxx(path.x[i], ts[i]) * path.qv_increments[i])
                .sum::<f64>();
        Self {
            terminal,
            initial,
            stochastic,
            time,
            second_order,
            residual: terminal - initial - stochastic - time - second_order,
        }
    }

    /// `|term_n - term|` in the order terminal, initial, stochastic, time and
    /// second order against `-1/2 int int F_x dL`.
    pub fn distances(&self, limit: &ItoTerms) -> [f64; 5] {
        [
            (self.terminal - limit.terminal).abs(),
            (self.initial - limit.initial).abs(),
            (self.stochastic - limit.stochastic).abs(),
            (self.time - limit.time).abs(),
            (self.second_order + 0.5 * limit.local_time).abs(),
        ]
    }
}

pub const CHAIN_TERMS: [&str; 5] = ["terminal", "initial", "stochastic", "time", "second_order"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainRow {
    pub n: u32,
    pub terms: SmoothTerms,
    pub distances: [f64; 5],
    pub derivative_consistency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainTable {
    pub function: String,
    pub limit: ItoTerms,
    pub rows: Vec<ChainRow>,
    /// Every term's distance is non-increasing in `n` (exact terms count as
    /// converged). `None` for a single-row schedule.
    pub verdict: Option<bool>,
}

/// Distances at or below this are treated as exact.
pub const EXACT_TOL: f64 = 1e-12;

/// Whether a sequence of distances shrinks along the schedule.
pub fn shrinking(d: &[f64]) -> bool {
    d.windows(2).all(|w| w[1] <= w[0] || w[1] <= EXACT_TOL)
}

/// Mollifies `F` for each `n` in the schedule and tabulates the classical
/// terms against the generalized ones on `[e, t]`.
#[allow(clippy::too_many_arguments)]
pub fn verify_smooth_ito_chain(
    f: &WeakDiffFunction,
    base: &BaseKernel,
    n_schedule: &[u32],
    path: &SamplePath,
    t: f64,
    eps: f64,
    config: &ItoConfig,
    lattice: &LatticeSpec,
) -> Result<ChainTable> {
    if n_schedule.is_empty() || n_schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::ConfigInvalid(
            "mollifier schedule must be increasing and non-empty".into(),
        ));
    }
    let plan = ResidualPlan::new(f, &path.grid, t, eps, config)?;
    let limit = plan.evaluate(path)?;
    let (from, to) = plan.window();
    let rows = n_schedule
        .iter()
        .map(|&n| {
            let m = mollify(f, &MollifierKernel { base: base.clone(), n }, lattice)?;
            let terms = SmoothTerms::compute(&m, path, from, to);
            Ok(ChainRow {
                n,
                terms,
                distances: terms.distances(&limit),
                derivative_consistency: m.derivative_consistency(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let verdict =
        (rows.len() > 1).then(|| (0..5).all(|j| shrinking(&rows.iter().map(|r| r.distances[j]).collect::<Vec<_>>())));
    Ok(ChainTable {
        function: f.name().to_string(),
        limit,
        rows,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::ito::formula::ito_residual;
    use crate::ito::weak::{catalog, Cutoff};
    use crate::sim::{simulate_path, IntegrandSpec, TimeGrid};

    #[test]
    fn smooth_function_agrees_with_the_generalized_formula() {
        let spec = IntegrandSpec::constant(1.0).unwrap();
        let path = simulate_path(&spec, Arc::new(TimeGrid::uniform(4000).unwrap()), 9).unwrap();
        let f = catalog::square(Cutoff::new(4.0, 6.0).unwrap());
        let cfg = ItoConfig::default();
        let table = verify_smooth_ito_chain(
            &f,
            &BaseKernel::Bump,
            &[16],
            &path,
            1.0,
            1.0 / 64.0,
            &cfg,
            &LatticeSpec::default(),
        )
        .unwrap();
        let direct = ito_residual(&f, &path, 1.0, 1.0 / 64.0, &cfg).unwrap();
        let row = &table.rows[0];
        assert!(
            (row.terms.residual - direct.residual).abs() < 0.05,
            "{row:?} vs {direct:?}"
        );
        // x^2 smoothed by a symmetric kernel only moves by a constant.
        assert!(row.distances[2] < 1e-2);
    }
}
