//! Integration of space-time functions against the local-time field
//! `(x, s) -> L_s^x`: the weighted norm `||f||^2 = int int f(x,s)^2 s^{-3/4} dx ds`,
//! elementary (cell-constant) functions and their exact integral, projection
//! onto break lattices, refinement limits and the `e -> 0` extension.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::local_time::{default_bandwidth, estimate_local_time_occupation, LocalTimeField, SpaceGrid};
use crate::quadrature::{refine_nonnegative, weighted_cell_sum, TimeWeight};
use crate::sim::{SamplePath, TIME_TOL};

pub type SpaceTimeFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Declared regularity; informational only, never trusted for correctness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Smoothness {
    Elementary,
    PiecewiseContinuous,
    Continuous,
    Smooth,
}

/// `f(x, s)` on `[-A, A] x (lo, hi]`, zero elsewhere.
#[derive(Clone)]
pub struct SpaceTimeFunction {
    name: String,
    eval: SpaceTimeFn,
    half_width: f64,
    window: (f64, f64),
    smoothness: Smoothness,
    elementary: Option<Arc<ElementaryFunction>>,
}

impl std::fmt::Debug for SpaceTimeFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpaceTimeFunction")
            .field("name", &self.name)
            .field("half_width", &self.half_width)
            .field("window", &self.window)
            .field("smoothness", &self.smoothness)
            .finish_non_exhaustive()
    }
}

impl SpaceTimeFunction {
    pub fn new(
        name: impl Into<String>,
        half_width: f64,
        smoothness: Smoothness,
        f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidSpaceGrid(format!("half width {half_width}")));
        }
        Ok(Self {
            name: name.into(),
            eval: Arc::new(f),
            half_width,
            window: (0.0, 1.0),
            smoothness,
            elementary: None,
        })
    }

    /// Wraps an elementary function; its box is the smallest symmetric one
    /// containing the x-breaks and its window spans the s-breaks.
    pub fn from_elementary(e: ElementaryFunction) -> Self {
        let e = Arc::new(e);
        let half_width = e.x_breaks[0].abs().max(e.x_breaks[e.x_breaks.len() - 1].abs());
        let window = (e.s_breaks[0], e.s_breaks[e.s_breaks.len() - 1]);
        let inner = e.clone();
        Self {
            name: "elementary".into(),
            eval: Arc::new(move |x, s| inner.eval(x, s)),
            half_width,
            window,
            smoothness: Smoothness::Elementary,
            elementary: Some(e),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn elementary(&self) -> Option<&ElementaryFunction> {
        self.elementary.as_deref()
    }

    #[inline]
    pub fn eval(&self, x: f64, s: f64) -> f64 {
        if x.abs() > self.half_width || s <= self.window.0 || s > self.window.1 {
            return 0.0;
        }
        (self.eval)(x, s)
    }

    /// `f * 1_{(lo, hi]}(s)`.
    pub fn restrict_time(&self, lo: f64, hi: f64) -> Self {
        let window = (self.window.0.max(lo), self.window.1.min(hi).max(self.window.0.max(lo)));
        let elementary = if window == self.window {
            self.elementary.clone()
        } else {
            None
        };
        Self {
            name: self.name.clone(),
            eval: self.eval.clone(),
            half_width: self.half_width,
            window,
            smoothness: self.smoothness,
            elementary,
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        let inner = self.eval.clone();
        Self {
            name: format!("{c}*{}", self.name),
            eval: Arc::new(move |x, s| c * inner(x, s)),
            half_width: self.half_width,
            window: self.window,
            smoothness: self.smoothness,
            elementary: self.elementary.as_ref().map(|e| Arc::new(e.scaled(c))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HNorm {
    pub value: f64,
    /// Lattice `(nx, ns)` of the final quadrature, `(0, 0)` when exact.
    pub resolution: (usize, usize),
    pub exact: bool,
}

const NORM_BASE: (usize, usize) = (16, 16);
const NORM_LEVELS: usize = 5;

/// Weighted norm; exact for elementary functions, otherwise midpoint
/// quadrature with the time weight integrated exactly per cell, refined until
/// stable. Raises `DivergentNorm` when refinement keeps growing.
pub fn h_norm(f: &SpaceTimeFunction) -> Result<HNorm> {
    if let Some(e) = f.elementary() {
        return Ok(HNorm {
            value: e.h_norm(),
            resolution: (0, 0),
            exact: true,
        });
    }
    let (lo, hi) = f.window;
    if hi <= lo {
        return Ok(HNorm {
            value: 0.0,
            resolution: (0, 0),
            exact: true,
        });
    }
    let g = |x: f64, s: f64| {
        let v = f.eval(x, s);
        v * v
    };
    let a = f.half_width;
    match refine_nonnegative(
        &g,
        (-a, a),
        (lo, hi),
        NORM_BASE,
        NORM_LEVELS,
        TimeWeight::InvQuarterCube,
    ) {
        Ok(r) => Ok(HNorm {
            value: r.value.sqrt(),
            resolution: r.resolution,
            exact: false,
        }),
        Err(last) => Err(Error::DivergentNorm {
            last: last.max(0.0).sqrt(),
        }),
    }
}

/// `sum f_kl 1_{(x_k, x_{k+1}]}(x) 1_{(s_l, s_{l+1}]}(s)`; coefficients are
/// stored row-major by time cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementaryFunction {
    x_breaks: Vec<f64>,
    s_breaks: Vec<f64>,
    coeffs: Vec<f64>,
}

fn check_breaks(b: &[f64], axis: &str) -> Result<()> {
    if b.len() < 2 {
        return Err(Error::InvalidElementary(format!("{axis} needs at least two breaks")));
    }
    if b.iter().any(|v| !v.is_finite()) || b.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidElementary(format!(
            "{axis} breaks must be finite and strictly increasing"
        )));
    }
    Ok(())
}

impl ElementaryFunction {
    pub fn new(x_breaks: Vec<f64>, s_breaks: Vec<f64>, coeffs: Vec<f64>) -> Result<Self> {
        check_breaks(&x_breaks, "x")?;
        check_breaks(&s_breaks, "s")?;
        if s_breaks[0] < 0.0 {
            return Err(Error::InvalidElementary("time breaks must be nonnegative".into()));
        }
        let expected = (x_breaks.len() - 1) * (s_breaks.len() - 1);
        if coeffs.len() != expected {
            return Err(Error::InvalidElementary(format!(
                "expected {expected} coefficients, got {}",
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidElementary("non-finite coefficient".into()));
        }
        Ok(Self {
            x_breaks,
            s_breaks,
            coeffs,
        })
    }

    /// Fills cell `(k, l)` with `f(k, l)`.
    pub fn from_fn(x_breaks: Vec<f64>, s_breaks: Vec<f64>, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let nx = x_breaks.len().saturating_sub(1);
        let ns = s_breaks.len().saturating_sub(1);
        let coeffs = (0..ns)
            .flat_map(|l| (0..nx).map(move |k| (k, l)))
            .map(|(k, l)| f(k, l))
            .collect();
        Self::new(x_breaks, s_breaks, coeffs)
    }

    pub fn x_breaks(&self) -> &[f64] {
        &self.x_breaks
    }

    pub fn s_breaks(&self) -> &[f64] {
        &self.s_breaks
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn x_cells(&self) -> usize {
        self.x_breaks.len() - 1
    }

    pub fn s_cells(&self) -> usize {
        self.s_breaks.len() - 1
    }

    #[inline]
    pub fn coeff(&self, k: usize, l: usize) -> f64 {
        self.coeffs[l * self.x_cells() + k]
    }

    pub fn eval(&self, x: f64, s: f64) -> f64 {
        let cell = |b: &[f64], v: f64| {
            if v <= b[0] || v > b[b.len() - 1] {
                None
            } else {
                Some(b.partition_point(|&p| p < v) - 1)
            }
        };
        match (cell(&self.x_breaks, x), cell(&self.s_breaks, s)) {
            (Some(k), Some(l)) => self.coeff(k, l),
            _ => 0.0,
        }
    }

    pub fn h_norm(&self) -> f64 {
        let mut total = 0.0;
        for l in 0..self.s_cells() {
            let w = TimeWeight::InvQuarterCube.integral(self.s_breaks[l], self.s_breaks[l + 1]);
            let row: f64 = (0..self.x_cells())
                .map(|k| {
                    let c = self.coeff(k, l);
                    c * c * (self.x_breaks[k + 1] - self.x_breaks[k])
                })
                .sum();
            total += row * w;
        }
        total.sqrt()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            x_breaks: self.x_breaks.clone(),
            s_breaks: self.s_breaks.clone(),
            coeffs: self.coeffs.iter().map(|v| c * v).collect(),
        }
    }

    /// Sum of two functions on the same breaks.
    pub fn try_add(&self, other: &Self) -> Result<Self> {
        if self.x_breaks != other.x_breaks || self.s_breaks != other.s_breaks {
            return Err(Error::InvalidElementary("break lattices differ".into()));
        }
        Ok(Self {
            x_breaks: self.x_breaks.clone(),
            s_breaks: self.s_breaks.clone(),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        })
    }

    /// `x_breaks,...` and `s_breaks,...` lines, then one `k,l,f_kl` row per cell.
    pub fn to_csv(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let mut out = format!("x_breaks,{}\ns_breaks,{}\n", join(&self.x_breaks), join(&self.s_breaks));
        for l in 0..self.s_cells() {
            for k in 0..self.x_cells() {
                let _ = writeln!(out, "{k},{l},{}", self.coeff(k, l));
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let mut breaks = |tag: &str| -> Result<Vec<f64>> {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing {tag} line")))?;
            let mut parts = line.split(',');
            if parts.next().map(str::trim) != Some(tag) {
                return Err(Error::Parse(format!("expected {tag} line")));
            }
            parts
                .map(|p| p.trim().parse::<f64>().map_err(|e| Error::Parse(e.to_string())))
                .collect()
        };
        let x_breaks = breaks("x_breaks")?;
        let s_breaks = breaks("s_breaks")?;
        check_breaks(&x_breaks, "x")?;
        check_breaks(&s_breaks, "s")?;
        let nx = x_breaks.len() - 1;
        let ns = s_breaks.len() - 1;
        let mut coeffs = vec![0.0; nx * ns];
        for line in lines {
            let p: Vec<&str> = line.split(',').map(str::trim).collect();
            if p.len() != 3 {
                return Err(Error::Parse(format!("bad coefficient row '{line}'")));
            }
            let k: usize = p[0]
                .parse()
                .map_err(|_| Error::Parse(format!("bad index in '{line}'")))?;
            let l: usize = p[1]
                .parse()
                .map_err(|_| Error::Parse(format!("bad index in '{line}'")))?;
            let v: f64 = p[2]
                .parse()
                .map_err(|_| Error::Parse(format!("bad value in '{line}'")))?;
            if k >= nx || l >= ns {
                return Err(Error::Parse(format!("cell ({k}, {l}) out of range")));
            }
            coeffs[l * nx + k] = v;
        }
        Self::new(x_breaks, s_breaks, coeffs)
    }
}

#[derive(Debug, Clone)]
pub struct Projection {
    pub function: ElementaryFunction,
    /// `||f - f_D||` by sub-cell quadrature.
    pub distance: f64,
}

const SUBCELLS: usize = 8;

fn cell_midpoint_coeffs(f: &SpaceTimeFunction, x_breaks: &[f64], s_breaks: &[f64]) -> Vec<f64> {
    let mut coeffs = Vec::with_capacity((x_breaks.len() - 1) * (s_breaks.len() - 1));
    for s in s_breaks.windows(2) {
        let sm = 0.5 * (s[0] + s[1]);
        for x in x_breaks.windows(2) {
            coeffs.push(f.eval(0.5 * (x[0] + x[1]), sm));
        }
    }
    coeffs
}

fn not_in_h(f: &SpaceTimeFunction, e: Error) -> Error {
    match e {
        Error::DivergentNorm { last } => Error::NotInH(format!("{}: norm diverges (last estimate {last})", f.name)),
        other => other,
    }
}

/// Cell-midpoint projection onto the given break lattice. Raises `NotInH`
/// when the weighted norm of `f` diverges.
pub fn project_to_elementary(f: &SpaceTimeFunction, x_breaks: &[f64], s_breaks: &[f64]) -> Result<Projection> {
    check_breaks(x_breaks, "x")?;
    check_breaks(s_breaks, "s")?;
    h_norm(f).map_err(|e| not_in_h(f, e))?;
    let function = ElementaryFunction::new(
        x_breaks.to_vec(),
        s_breaks.to_vec(),
        cell_midpoint_coeffs(f, x_breaks, s_breaks),
    )?;

    let mut dist2 = 0.0;
    for l in 0..function.s_cells() {
        let (s0, s1) = (s_breaks[l], s_breaks[l + 1]);
        for k in 0..function.x_cells() {
            let c = function.coeff(k, l);
            let (x0, x1) = (x_breaks[k], x_breaks[k + 1]);
            let g = |x: f64, s: f64| {
                let d = f.eval(x, s) - c;
                d * d
            };
            dist2 += weighted_cell_sum(&g, (x0, x1), (s0, s1), SUBCELLS, SUBCELLS, TimeWeight::InvQuarterCube);
        }
    }
    let a = f.half_width;
    let (lo, hi) = f.window;
    let covered = x_breaks[0] <= -a
        && x_breaks[x_breaks.len() - 1] >= a
        && s_breaks[0] <= lo
        && s_breaks[s_breaks.len() - 1] >= hi;
    if !covered && hi > lo {
        let (xb0, xb1) = (x_breaks[0], x_breaks[x_breaks.len() - 1]);
        let (sb0, sb1) = (s_breaks[0], s_breaks[s_breaks.len() - 1]);
        let outside = |x: f64, s: f64| {
            if x > xb0 && x <= xb1 && s > sb0 && s <= sb1 {
                0.0
            } else {
                let v = f.eval(x, s);
                v * v
            }
        };
        let n = 32 * SUBCELLS;
        dist2 += weighted_cell_sum(&outside, (-a, a), (lo, hi), n, n, TimeWeight::InvQuarterCube);
    }
    Ok(Projection {
        function,
        distance: dist2.sqrt(),
    })
}

/// Exact integral of an elementary function against a field, with the time
/// breaks truncated at `t`. Every break must be a node of the field.
pub fn integrate_elementary(e: &ElementaryFunction, field: &LocalTimeField, t: f64) -> Result<f64> {
    let x_idx = e
        .x_breaks
        .iter()
        .map(|&x| {
            field.level_index(x).ok_or(Error::GridMismatch {
                axis: "space",
                value: x,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if t <= e.s_breaks[0] + TIME_TOL {
        return Ok(0.0);
    }
    let end = t.min(e.s_breaks[e.s_breaks.len() - 1]);
    let mut s_eff: Vec<f64> = e.s_breaks.iter().copied().filter(|&s| s < end - TIME_TOL).collect();
    s_eff.push(end);
    let s_idx = s_eff
        .iter()
        .map(|&s| {
            field
                .time_index(s)
                .ok_or(Error::GridMismatch { axis: "time", value: s })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(integrate_indexed(&e.coeffs, e.x_cells(), &x_idx, &s_idx, field))
}

fn integrate_indexed(coeffs: &[f64], nx: usize, x_idx: &[usize], s_idx: &[usize], field: &LocalTimeField) -> f64 {
    let mut total = 0.0;
    for l in 0..s_idx.len() - 1 {
        let r0 = field.row(s_idx[l]);
        let r1 = field.row(s_idx[l + 1]);
        let row = &coeffs[l * nx..(l + 1) * nx];
        let mut acc = 0.0;
        for (k, &c) in row.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let (a, b) = (x_idx[k], x_idx[k + 1]);
            acc += c * ((r1[b] - r0[b]) - (r1[a] - r0[a]));
        }
        total += acc;
    }
    total
}

/// Nested break lattices used to approach `int int f dL` from elementary
/// functions. Level `j` has `x_cells * 2^j` cells on `[-A, A]` and
/// `s_cells * 2^j` cells on the time window.
///
/// Space cells matter more than time cells: `x -> L^x` has a cusp at the
/// starting point, so a Riemann sum over coarse space breaks is biased by
/// O(width). By default the finest space cells are as narrow as the field
/// bandwidth.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
#[serde(default)]
pub struct RefinementSchedule {
    /// Base number of space cells; `None` picks it from the bandwidth.
    pub x_cells: Option<usize>,
    pub s_cells: usize,
    pub levels: usize,
    /// Field bandwidth; `None` means `sqrt(mesh)`.
    pub bandwidth: Option<f64>,
}

impl Default for RefinementSchedule {
    fn default() -> Self {
        Self {
            x_cells: None,
            s_cells: 4,
            levels: 4,
            bandwidth: None,
        }
    }
}

#[derive(Debug, Clone)]
struct LevelBreaks {
    x_breaks: Vec<f64>,
    x_idx: Vec<usize>,
    s_breaks: Vec<f64>,
}

/// Precomputed lattices and field geometry for one time window. Plans built
/// from the same box, schedule and mesh share their space grid, so several
/// windows can be evaluated on one field.
#[derive(Debug, Clone)]
pub struct LtIntegralPlan {
    half_width: f64,
    window: (f64, f64),
    levels: Vec<LevelBreaks>,
    space: SpaceGrid,
    bandwidth: f64,
}

/// Projections of one function onto every level of a plan.
#[derive(Debug, Clone)]
pub struct ProjectedLevels {
    coeffs: Vec<Vec<f64>>,
}

impl ProjectedLevels {
    pub fn level(&self, plan: &LtIntegralPlan, j: usize) -> Result<ElementaryFunction> {
        let lv = &plan.levels[j];
        ElementaryFunction::new(lv.x_breaks.clone(), lv.s_breaks.clone(), self.coeffs[j].clone())
    }
}

impl LtIntegralPlan {
    pub fn new(half_width: f64, window: (f64, f64), schedule: &RefinementSchedule, path_mesh: f64) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidSpaceGrid(format!("half width {half_width}")));
        }
        let (lo, hi) = window;
        if !(lo >= 0.0 && hi > lo) {
            return Err(Error::ConfigInvalid(format!("empty time window ({lo}, {hi}]")));
        }
        if schedule.levels == 0 || schedule.s_cells == 0 || schedule.x_cells == Some(0) {
            return Err(Error::ConfigInvalid(
                "refinement schedule needs positive cell counts and levels".into(),
            ));
        }
        let top = schedule.levels - 1;
        let target = schedule.bandwidth.unwrap_or_else(|| path_mesh.sqrt());
        if !(target > 0.0 && target.is_finite()) {
            return Err(Error::ConfigInvalid(format!("bandwidth {target}")));
        }
        // Automatic choice: a whole number of base cells per unit length, so
        // integer points are breaks when 2A is an integer, and finest cells no
        // wider than the bandwidth.
        let base_x = schedule.x_cells.unwrap_or_else(|| {
            let per_unit = (1.0 / (target * (1usize << top) as f64)).ceil().max(1.0);
            ((2.0 * half_width).ceil() * per_unit) as usize
        });
        let finest_x = base_x << top;
        let finest_width = 2.0 * half_width / finest_x as f64;
        let per_cell = (finest_width / target).ceil().max(1.0) as usize;
        let spacing = finest_width / per_cell as f64;
        let space = SpaceGrid::symmetric(half_width, spacing)?;
        let bandwidth = match schedule.bandwidth {
            Some(b) => b,
            None => default_bandwidth(spacing, path_mesh),
        };

        let levels = (0..schedule.levels)
            .map(|j| {
                let nx = base_x << j;
                let stride = per_cell << (top - j);
                let x_idx: Vec<usize> = (0..=nx).map(|k| k * stride).collect();
                let x_breaks = x_idx.iter().map(|&i| space.levels()[i]).collect();
                let ns = schedule.s_cells << j;
                let s_breaks = (0..=ns)
                    .map(|l| {
                        if l == ns {
                            hi
                        } else {
                            lo + (hi - lo) * l as f64 / ns as f64
                        }
                    })
                    .collect();
                LevelBreaks {
                    x_breaks,
                    x_idx,
                    s_breaks,
                }
            })
            .collect();
        Ok(Self {
            half_width,
            window,
            levels,
            space,
            bandwidth,
        })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn levels(&self) -> usize {
        self.levels.len()
    }

    pub fn space(&self) -> &SpaceGrid {
        &self.space
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Every time break of every level.
    pub fn field_times(&self) -> Vec<f64> {
        merge_times(self.levels.iter().flat_map(|l| l.s_breaks.iter().copied()))
    }

    /// Projects `f * 1_window` onto every level; `NotInH` if its norm diverges.
    pub fn project(&self, f: &SpaceTimeFunction) -> Result<ProjectedLevels> {
        let g = f.restrict_time(self.window.0, self.window.1);
        h_norm(&g).map_err(|e| not_in_h(&g, e))?;
        let coeffs = self
            .levels
            .iter()
            .map(|lv| cell_midpoint_coeffs(&g, &lv.x_breaks, &lv.s_breaks))
            .collect();
        Ok(ProjectedLevels { coeffs })
    }

    pub fn field(&self, path: &SamplePath, extra_times: &[f64]) -> Result<LocalTimeField> {
        let mut times = self.field_times();
        times.extend_from_slice(extra_times);
        estimate_local_time_occupation(path, &self.space, &merge_times(times), self.bandwidth)
    }

    /// Integral of each level's projection against `field`.
    pub fn integrate(&self, proj: &ProjectedLevels, field: &LocalTimeField) -> Result<Vec<f64>> {
        if field.space().len() != self.space.len() || field.space().spacing() != self.space.spacing() {
            return Err(Error::GridMismatch {
                axis: "space",
                value: field.space().spacing(),
            });
        }
        self.levels
            .iter()
            .zip(&proj.coeffs)
            .map(|(lv, c)| {
                let s_idx = lv
                    .s_breaks
                    .iter()
                    .map(|&s| {
                        field
                            .time_index(s)
                            .ok_or(Error::GridMismatch { axis: "time", value: s })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(integrate_indexed(c, lv.x_breaks.len() - 1, &lv.x_idx, &s_idx, field))
            })
            .collect()
    }
}

/// Sorted union with near-duplicates removed.
pub fn merge_times(times: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = times.into_iter().collect();
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() <= TIME_TOL);
    v
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LtIntegral {
    /// Finest-level value.
    pub value: f64,
    /// Last Cauchy increment.
    pub error: f64,
    pub level_values: Vec<f64>,
    /// Whether the increments shrank over the schedule. Single-path increments
    /// are random, so this is a diagnostic; convergence proper is judged over
    /// many paths.
    pub converged: bool,
}

impl LtIntegral {
    fn from_levels(level_values: Vec<f64>) -> Result<Self> {
        if level_values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NoConvergence("non-finite elementary integral".into()));
        }
        let incs: Vec<f64> = level_values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        let error = incs.last().copied().unwrap_or(0.0);
        let converged = incs.first().is_none_or(|&first| error <= first);
        Ok(Self {
            value: level_values[level_values.len() - 1],
            error,
            level_values,
            converged,
        })
    }
}

/// `int_0^t int f(x, s) L(dx, ds)` as the limit of elementary projections.
pub fn integrate_wrt_local_time(
    f: &SpaceTimeFunction,
    path: &SamplePath,
    t: f64,
    schedule: &RefinementSchedule,
) -> Result<LtIntegral> {
    path.grid.require_index(t)?;
    let (lo, hi) = f.window();
    let hi = hi.min(t);
    if hi <= lo {
        h_norm(f).map_err(|e| not_in_h(f, e))?;
        return LtIntegral::from_levels(vec![0.0; schedule.levels.max(1)]);
    }
    let plan = LtIntegralPlan::new(f.half_width(), (lo, hi), schedule, path.grid.mesh())?;
    let proj = plan.project(f)?;
    let field = plan.field(path, &[])?;
    LtIntegral::from_levels(plan.integrate(&proj, &field)?)
}

/// Neville extrapolation to `e = 0` in the variable `sqrt(e)`.
pub fn richardson_sqrt(eps: &[f64], values: &[f64]) -> f64 {
    let r: Vec<f64> = eps.iter().map(|e| e.sqrt()).collect();
    let mut p = values.to_vec();
    let n = p.len();
    for m in 1..n {
        for i in 0..n - m {
            p[i] = (r[i] * p[i + 1] - r[i + m] * p[i]) / (r[i] - r[i + m]);
        }
    }
    p[0]
}

/// Default truncation schedule for the `e -> 0` extension.
pub const DEFAULT_EPS_SCHEDULE: [f64; 3] = [1.0 / 16.0, 1.0 / 64.0, 1.0 / 256.0];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonExtension {
    pub limit: f64,
    /// `(e, int_e^t int f dL)` in schedule order.
    pub values: Vec<(f64, f64)>,
    /// Set when the schedule has a single entry, so no extrapolation happened.
    pub warning: bool,
    /// Whether successive increments shrank (diagnostic, see [`LtIntegral`]).
    pub converged: bool,
}

/// Plans for windows `(e_j, t]` sharing one field.
#[derive(Debug, Clone)]
pub struct EpsilonPlan {
    eps: Vec<f64>,
    plans: Vec<LtIntegralPlan>,
}

impl EpsilonPlan {
    pub fn new(half_width: f64, t: f64, eps: &[f64], schedule: &RefinementSchedule, path_mesh: f64) -> Result<Self> {
        if eps.is_empty() {
            return Err(Error::ConfigInvalid("empty truncation schedule".into()));
        }
        let mut eps = eps.to_vec();
        if eps.iter().any(|&e| !(e > 0.0 && e < t)) {
            return Err(Error::ConfigInvalid(format!("truncation levels must lie in (0, {t})")));
        }
        eps.sort_by(|a, b| b.total_cmp(a));
        eps.dedup();
        let plans = eps
            .iter()
            .map(|&e| LtIntegralPlan::new(half_width, (e, t), schedule, path_mesh))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { eps, plans })
    }

    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    pub fn plans(&self) -> &[LtIntegralPlan] {
        &self.plans
    }

    pub fn field_times(&self) -> Vec<f64> {
        merge_times(self.plans.iter().flat_map(|p| p.field_times()))
    }

    pub fn field(&self, path: &SamplePath, extra_times: &[f64]) -> Result<LocalTimeField> {
        let mut times = self.field_times();
        times.extend_from_slice(extra_times);
        self.plans[0].field(path, &times)
    }

    pub fn project(&self, f: &SpaceTimeFunction) -> Result<Vec<ProjectedLevels>> {
        self.plans.iter().map(|p| p.project(f)).collect()
    }

    pub fn evaluate(&self, proj: &[ProjectedLevels], field: &LocalTimeField) -> Result<EpsilonExtension> {
        let mut values = Vec::with_capacity(self.eps.len());
        for ((plan, p), &e) in self.plans.iter().zip(proj).zip(&self.eps) {
            let v = *plan.integrate(p, field)?.last().expect("plan has levels");
            if !v.is_finite() {
                return Err(Error::NoConvergence(format!("non-finite integral at e = {e}")));
            }
            values.push((e, v));
        }
        let vs: Vec<f64> = values.iter().map(|p| p.1).collect();
        let incs: Vec<f64> = vs.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        let converged = incs.windows(2).all(|w| w[1] <= w[0]);
        Ok(EpsilonExtension {
            limit: richardson_sqrt(&self.eps, &vs),
            values,
            warning: self.eps.len() == 1,
            converged,
        })
    }
}

/// `lim_{e -> 0} int_e^t int f dL`, for `f` whose weighted norm is finite on
/// every `(e, t]` but possibly not on `(0, t]`.
pub fn extend_epsilon_to_zero(
    f: &SpaceTimeFunction,
    path: &SamplePath,
    t: f64,
    eps_schedule: &[f64],
    schedule: &RefinementSchedule,
) -> Result<EpsilonExtension> {
    path.grid.require_index(t)?;
    let plan = EpsilonPlan::new(f.half_width(), t, eps_schedule, schedule, path.grid.mesh())?;
    let proj = plan.project(f)?;
    let field = plan.field(path, &[])?;
    plan.evaluate(&proj, &field)
}
