//! Space-time mollification `F_n = F * g_n`, `g_n(x) g_n(t)`, `g_n(s) = n g(n s)`,
//! tabulated on a lattice and read back by bilinear interpolation.
//!
//! `F` is extended in time by freezing it outside `[0, 1]`, so the time
//! kernel keeps unit mass up to the ends. Derivatives are taken by moving
//! them onto the data (`F_x * g_n`) or onto the kernel (`F_x * g_n'` for the
//! second derivative); `F * g_n'` is kept as a consistency check on `F_x * g_n`.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ito::weak::WeakDiffFunction;
use crate::lt_integral::Smoothness;

/// Profile `g` on `[-1, 1]` with derivative `g'`.
#[derive(Clone)]
pub enum BaseKernel {
    /// `exp(-1 / (1 - s^2))`.
    Bump,
    Custom {
        name: String,
        g: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        dg: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl std::fmt::Debug for BaseKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Bump => write!(f, "Bump"),
            Self::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl BaseKernel {
    pub fn g(&self, s: f64) -> f64 {
        match self {
            Self::Bump => {
                if s.abs() >= 1.0 {
                    0.0
                } else {
                    (-1.0 / (1.0 - s * s)).exp()
                }
            }
            Self::Custom { g, .. } => {
                if s.abs() > 1.0 {
                    0.0
                } else {
                    g(s)
                }
            }
        }
    }

    pub fn dg(&self, s: f64) -> f64 {
        match self {
            Self::Bump => {
                if s.abs() >= 1.0 {
                    0.0
                } else {
                    let q = 1.0 - s * s;
                    self.g(s) * (-2.0 * s / (q * q))
                }
            }
            Self::Custom { dg, .. } => {
                if s.abs() > 1.0 {
                    0.0
                } else {
                    dg(s)
                }
            }
        }
    }

    /// Mass of `g` on `[-1, 1]`; `KernelNotNormalized` if it is not a finite
    /// positive number or `g` takes negative values.
    pub fn mass(&self) -> Result<f64> {
        let m = 20_000;
        let h = 2.0 / m as f64;
        let mut total = 0.0;
        for i in 0..m {
            let v = self.g(-1.0 + (i as f64 + 0.5) * h);
            if v < 0.0 || !v.is_finite() {
                return Err(Error::KernelNotNormalized(format!("kernel value {v} is not a density")));
            }
            total += v * h;
        }
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::KernelNotNormalized(format!("kernel mass {total}")));
        }
        Ok(total)
    }
}

#[derive(Debug, Clone)]
pub struct MollifierKernel {
    pub base: BaseKernel,
    pub n: u32,
}

impl MollifierKernel {
    pub fn bump(n: u32) -> Self {
        Self {
            base: BaseKernel::Bump,
            n,
        }
    }
}

/// Lattice resolution relative to the kernel width `1/n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(default)]
pub struct LatticeSpec {
    /// Space nodes per kernel half-width.
    pub per_x: usize,
    /// Time nodes per kernel half-width.
    pub per_t: usize,
    /// Tabulated range beyond the support box of `F_x`.
    pub margin: f64,
}

impl Default for LatticeSpec {
    fn default() -> Self {
        Self {
            per_x: 8,
            per_t: 4,
            margin: 2.0,
        }
    }
}

/// Discrete weights `w_j` on nodes `j = -(m-1)..=(m-1)` (value) and the
/// matching derivative weights, normalized so that constants and affine
/// functions are reproduced exactly.
fn weights(base: &BaseKernel, m: usize, step: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = m as i64;
    let nodes: Vec<f64> = (-(m - 1)..m).map(|j| j as f64 / m as f64).collect();
    let raw: Vec<f64> = nodes.iter().map(|&s| base.g(s)).collect();
    let mass: f64 = raw.iter().sum();
    if !(mass > 0.0 && mass.is_finite()) || raw.iter().any(|v| *v < 0.0) {
        return Err(Error::KernelNotNormalized(format!("discrete mass {mass}")));
    }
    let w: Vec<f64> = raw.iter().map(|v| v / mass).collect();
    let mut d: Vec<f64> = nodes.iter().map(|&s| base.dg(s)).collect();
    let drift: f64 = d.iter().sum();
    for (dj, wj) in d.iter_mut().zip(&w) {
        *dj -= drift * wj;
    }
    // sum_j d_j (-j step) = 1, so that (x * g')(x) = 1.
    let moment: f64 = d.iter().zip(-(m - 1)..m).map(|(dj, j)| -dj * j as f64 * step).sum();
    if !(moment.abs() > 0.0 && moment.is_finite()) {
        return Err(Error::KernelNotNormalized(
            "derivative kernel has no first moment".into(),
        ));
    }
    for dj in &mut d {
        *dj /= moment;
    }
    Ok((w, d))
}

/// Tabulated `F_n` with its derivatives.
#[derive(Debug, Clone)]
pub struct MollifiedFunction {
    n: u32,
    x0: f64,
    hx: f64,
    nx: usize,
    nt: usize,
    value: Vec<f64>,
    dx: Vec<f64>,
    dxx: Vec<f64>,
    dt: Vec<f64>,
    consistency: f64,
    source: WeakDiffFunction,
}

/// Convolves columns of a `rows x cols` array (time axis) with clamped
/// indices; `frozen` selects clamping (true) versus zero extension.
fn conv_time(src: &[f64], cols: usize, rows: usize, w: &[f64], frozen: bool) -> Vec<f64> {
    let half = (w.len() / 2) as i64;
    let mut out = vec![0.0; src.len()];
    for b in 0..rows {
        let dst = &mut out[b * cols..(b + 1) * cols];
        for (jj, &wj) in w.iter().enumerate() {
            let j = jj as i64 - half;
            let bb = b as i64 - j;
            let bb = if (0..rows as i64).contains(&bb) {
                bb as usize
            } else if frozen {
                bb.clamp(0, rows as i64 - 1) as usize
            } else {
                continue;
            };
            let row = &src[bb * cols..(bb + 1) * cols];
            for (d, s) in dst.iter_mut().zip(row) {
                *d += wj * s;
            }
        }
    }
    out
}

/// Convolves along space: `out[b][a] = sum_j w_j src[b][a + pad - j]`.
fn conv_space(src: &[f64], src_cols: usize, rows: usize, out_cols: usize, w: &[f64]) -> Vec<f64> {
    let pad = w.len() / 2;
    let mut out = vec![0.0; rows * out_cols];
    for b in 0..rows {
        let row = &src[b * src_cols..(b + 1) * src_cols];
        let dst = &mut out[b * out_cols..(b + 1) * out_cols];
        for (a, d) in dst.iter_mut().enumerate() {
            let centre = a + pad;
            let mut acc = 0.0;
            for (jj, &wj) in w.iter().enumerate() {
                acc += wj * row[centre + pad - jj];
            }
            *d = acc;
        }
    }
    out
}

/// Builds `F_n` on `[-B, B] x [0, 1]` with `B` = support box + margin.
pub fn mollify(f: &WeakDiffFunction, kernel: &MollifierKernel, lattice: &LatticeSpec) -> Result<MollifiedFunction> {
    if kernel.n == 0 || lattice.per_x < 2 || lattice.per_t < 2 {
        return Err(Error::ConfigInvalid(
            "mollifier needs n >= 1 and at least two nodes per half-width".into(),
        ));
    }
    kernel.base.mass()?;
    let n = kernel.n as f64;
    let hx = 1.0 / (n * lattice.per_x as f64);
    let nt_cells = kernel.n as usize * lattice.per_t;
    let ht = 1.0 / nt_cells as f64;
    let (wx, dwx) = weights(&kernel.base, lattice.per_x, hx)?;
    let (wt, _) = weights(&kernel.base, lattice.per_t, ht)?;

    let half_cells = ((f.half_width() + lattice.margin.max(0.0)) / hx).ceil() as usize;
    let x0 = -(half_cells as f64) * hx;
    let nx = 2 * half_cells + 1;
    let nt = nt_cells + 1;
    let pad = wx.len() / 2;
    let src_cols = nx + 2 * pad;
    let xs: Vec<f64> = (0..src_cols).map(|a| x0 + (a as f64 - pad as f64) * hx).collect();
    let ts: Vec<f64> = (0..nt).map(|b| if b + 1 == nt { 1.0 } else { b as f64 * ht }).collect();

    let sample = |h: &dyn Fn(f64, f64) -> f64| -> Vec<f64> {
        let mut v = Vec::with_capacity(src_cols * nt);
        for &t in &ts {
            v.extend(xs.iter().map(|&x| h(x, t)));
        }
        v
    };
    let raw_v = conv_time(&sample(&|x, t| f.value(x, t)), src_cols, nt, &wt, true);
    let raw_dx = conv_time(&sample(&|x, t| f.dx(x, t)), src_cols, nt, &wt, true);
    let raw_dt = conv_time(&sample(&|x, t| f.dt(x, t)), src_cols, nt, &wt, false);

    let value = conv_space(&raw_v, src_cols, nt, nx, &wx);
    let dx = conv_space(&raw_dx, src_cols, nt, nx, &wx);
    let dxx = conv_space(&raw_dx, src_cols, nt, nx, &dwx);
    let dt = conv_space(&raw_dt, src_cols, nt, nx, &wx);
    let alt = conv_space(&raw_v, src_cols, nt, nx, &dwx);
    let consistency = dx.iter().zip(&alt).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    Ok(MollifiedFunction {
        n: kernel.n,
        x0,
        hx,
        nx,
        nt,
        value,
        dx,
        dxx,
        dt,
        consistency,
        source: f.clone(),
    })
}

impl MollifiedFunction {
    pub fn n(&self) -> u32 {
        self.n
    }

    /// `max |F_x * g_n - F * g_n'|` over the lattice.
    pub fn derivative_consistency(&self) -> f64 {
        self.consistency
    }

    /// Tabulated half width; beyond it the source function is used as is.
    pub fn table_half_width(&self) -> f64 {
        -self.x0
    }

    #[inline]
    fn locate(&self, x: f64, t: f64) -> Option<(usize, usize, f64, f64)> {
        let pa = (x - self.x0) / self.hx;
        if !(pa >= 0.0 && pa < (self.nx - 1) as f64) {
            return None;
        }
        let pb = t.clamp(0.0, 1.0) * (self.nt - 1) as f64;
        let a = pa as usize;
        let b = (pb as usize).min(self.nt - 2);
        Some((a, b, pa - a as f64, pb - b as f64))
    }

    #[inline]
    fn interp(&self, table: &[f64], (a, b, fa, fb): (usize, usize, f64, f64)) -> f64 {
        let i = b * self.nx + a;
        let j = i + self.nx;
        let lo = table[i] + fa * (table[i + 1] - table[i]);
        let hi = table[j] + fa * (table[j + 1] - table[j]);
        lo + fb * (hi - lo)
    }

    pub fn value(&self, x: f64, t: f64) -> f64 {
        match self.locate(x, t) {
            Some(c) => self.interp(&self.value, c),
            None => self.source.value(x, t.clamp(0.0, 1.0)),
        }
    }

    pub fn dx(&self, x: f64, t: f64) -> f64 {
        match self.locate(x, t) {
            Some(c) => self.interp(&self.dx, c),
            None => self.source.dx(x, t.clamp(0.0, 1.0)),
        }
    }

    pub fn dxx(&self, x: f64, t: f64) -> f64 {
        match self.locate(x, t) {
            Some(c) => self.interp(&self.dxx, c),
            None => 0.0,
        }
    }

    pub fn dt(&self, x: f64, t: f64) -> f64 {
        match self.locate(x, t) {
            Some(c) => self.interp(&self.dt, c),
            None => self.source.dt(x, t),
        }
    }

    /// `F_n` viewed as a weakly differentiable function.
    pub fn as_weak(self: &Arc<Self>) -> WeakDiffFunction {
        let (a, b, c) = (self.clone(), self.clone(), self.clone());
        WeakDiffFunction::new(
            format!("{}_n{}", self.source.name(), self.n),
            self.source.half_width() + 1.0 / self.n as f64,
            Smoothness::Smooth,
            move |x, t| a.value(x, t),
            move |x, t| b.dx(x, t),
            move |x, t| c.dt(x, t),
        )
        .expect("positive half width")
    }
}
