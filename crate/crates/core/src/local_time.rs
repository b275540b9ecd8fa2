//! Local time of `X` in the semimartingale normalization
//! `L_t^x = lim (1/2e) int_0^t 1{|X_s - x| < e} d<X>_s`, estimated two ways:
//! an occupation (bandwidth) estimator on a space-time grid and the discrete
//! Tanaka identity at a single level.

use std::io::Write;

use crate::error::{Error, Result};
use crate::sim::{SamplePath, TIME_TOL};

/// Uniformly spaced levels covering `[-A, A]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceGrid {
    levels: Vec<f64>,
    spacing: f64,
}

impl SpaceGrid {
    /// Levels `-A + k * spacing`; `2A / spacing` must be (close to) an integer.
    pub fn symmetric(half_width: f64, spacing: f64) -> Result<Self> {
        if !(half_width > 0.0 && spacing > 0.0) {
            return Err(Error::InvalidSpaceGrid(format!(
                "half width {half_width}, spacing {spacing}"
            )));
        }
        let cells = 2.0 * half_width / spacing;
        let n = cells.round();
        if (cells - n).abs() > 1e-6 * cells.max(1.0) {
            return Err(Error::InvalidSpaceGrid(format!(
                "spacing {spacing} does not divide [-{half_width}, {half_width}]"
            )));
        }
        let n = n as usize;
        let levels = (0..=n).map(|k| -half_width + k as f64 * spacing).collect();
        Ok(Self { levels, spacing })
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn half_width(&self) -> f64 {
        -self.levels[0]
    }

    /// Index of the level equal to `x` up to a small fraction of the spacing.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let pos = (x - self.levels[0]) / self.spacing;
        let k = pos.round();
        if k < 0.0 || k as usize >= self.levels.len() {
            return None;
        }
        let k = k as usize;
        ((self.levels[k] - x).abs() <= 1e-9 * self.spacing.max(1.0)).then_some(k)
    }
}

/// `L[l][k] ~ L_{s_l}^{x_k}` for a single path.
#[derive(Debug, Clone)]
pub struct LocalTimeField {
    space: SpaceGrid,
    times: Vec<f64>,
    values: Vec<f64>,
    bandwidth: f64,
    seed: u64,
}

impl LocalTimeField {
    pub fn space(&self) -> &SpaceGrid {
        &self.space
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn value(&self, l: usize, k: usize) -> f64 {
        self.values[l * self.space.len() + k]
    }

    pub fn row(&self, l: usize) -> &[f64] {
        let n = self.space.len();
        &self.values[l * n..(l + 1) * n]
    }

    pub fn time_index(&self, s: f64) -> Option<usize> {
        let i = self.times.partition_point(|&t| t < s - TIME_TOL);
        (i < self.times.len() && (self.times[i] - s).abs() <= TIME_TOL).then_some(i)
    }

    pub fn level_index(&self, x: f64) -> Option<usize> {
        self.space.index_of(x)
    }

    /// `sum_k g(x_k) L[l][k] * spacing`, the field side of the occupation formula.
    pub fn occupation_integral(&self, l: usize, g: impl Fn(f64) -> f64) -> f64 {
        let h = self.space.spacing();
        self.space
            .levels()
            .iter()
            .zip(self.row(l))
            .map(|(&x, &v)| g(x) * v)
            .sum::<f64>()
            * h
    }

    /// Header row of levels, then one row per time (first column is the time).
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let header: Vec<String> = self.space.levels().iter().map(|x| x.to_string()).collect();
        writeln!(out, "s,{}", header.join(","))?;
        for (l, s) in self.times.iter().enumerate() {
            let row: Vec<String> = self.row(l).iter().map(|v| v.to_string()).collect();
            writeln!(out, "{s},{}", row.join(","))?;
        }
        Ok(())
    }

    /// Little-endian dump: `{n_times: u64, n_levels: u64}`, times, levels, values.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(&(self.times.len() as u64).to_le_bytes())?;
        out.write_all(&(self.space.len() as u64).to_le_bytes())?;
        for v in self.times.iter().chain(self.space.levels()).chain(&self.values) {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }
}

/// `max(spacing, sqrt(mesh))`.
pub fn default_bandwidth(spacing: f64, mesh: f64) -> f64 {
    spacing.max(mesh.sqrt())
}

/// Occupation estimator
/// `L[l][k] = (1/2e) sum_{t_i < s_l} 1{|x_i - x_k| < e} u_i^2 dt_i`.
///
/// Times are sorted, deduplicated and clamped to contain 0.
pub fn estimate_local_time_occupation(
    path: &SamplePath,
    space: &SpaceGrid,
    times: &[f64],
    bandwidth: f64,
) -> Result<LocalTimeField> {
    if times.is_empty() {
        return Err(Error::EmptyTimes);
    }
    if !(bandwidth > 0.0) || bandwidth < 0.5 * space.spacing() {
        return Err(Error::BandwidthTooSmall {
            bandwidth,
            spacing: space.spacing(),
        });
    }
    let mut times: Vec<f64> = times.to_vec();
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::ConfigInvalid("non-finite field time".into()));
    }
    times.push(0.0);
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() <= TIME_TOL);

    let n_levels = space.len();
    let x0 = space.levels()[0];
    let h = space.spacing();
    let scale = 1.0 / (2.0 * bandwidth);
    let mut acc = vec![0.0; n_levels];
    let mut values = Vec::with_capacity(times.len() * n_levels);
    let grid_times = path.times();
    let mut next = 0;

    for (i, &ti) in grid_times[..path.steps()].iter().enumerate() {
        while next < times.len() && times[next] <= ti + TIME_TOL {
            values.extend_from_slice(&acc);
            next += 1;
        }
        let xi = path.x[i];
        let lo = ((xi - bandwidth - x0) / h).ceil().max(0.0);
        let hi = ((xi + bandwidth - x0) / h).floor();
        if hi < 0.0 || lo >= n_levels as f64 {
            continue;
        }
        let weight = scale * path.qv_increments[i];
        let (lo, hi) = (lo as usize, (hi as usize).min(n_levels - 1));
        for (k, a) in acc.iter_mut().enumerate().take(hi + 1).skip(lo) {
            if (xi - space.levels()[k]).abs() < bandwidth {
                *a += weight;
            }
        }
    }
    while next < times.len() {
        values.extend_from_slice(&acc);
        next += 1;
    }
    Ok(LocalTimeField {
        space: space.clone(),
        times,
        values,
        bandwidth,
        seed: path.seed,
    })
}

#[inline]
pub(crate) fn sign0(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Discrete Tanaka estimate
/// `|X_t - a| - |a| - sum_{t_i < t} sign(x_i - a) (x_{i+1} - x_i)`, `sign(0) = 0`.
pub fn estimate_local_time_tanaka(path: &SamplePath, level: f64, t: f64) -> Result<f64> {
    let end = path.grid.require_index(t)?;
    let mut sum = 0.0;
    for i in 0..end {
        sum += sign0(path.x[i] - level) * (path.x[i + 1] - path.x[i]);
    }
    Ok((path.x[end] - level).abs() - level.abs() - sum)
}
