//! Functions `F(x, t)` with a weak space derivative, their localization and
//! integrability certificates.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::local_time::sign0;
use crate::lt_integral::{Smoothness, SpaceTimeFunction};
use crate::quadrature::{refine_nonnegative, TimeWeight};

pub type Field2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Smooth step: 0 for `r <= 0`, 1 for `r >= 1`, `C^inf` in between.
fn smooth_step(r: f64) -> (f64, f64) {
    if r <= 0.0 {
        return (0.0, 0.0);
    }
    if r >= 1.0 {
        return (1.0, 0.0);
    }
    let a = (-1.0 / r).exp();
    let b = (-1.0 / (1.0 - r)).exp();
    let d = a + b;
    let deriv = a * b * (1.0 / (r * r) + 1.0 / ((1.0 - r) * (1.0 - r))) / (d * d);
    (a / d, deriv)
}

/// `C^inf` cutoff equal to 1 on `[-inner, inner]` and 0 outside `[-outer, outer]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cutoff {
    pub inner: f64,
    pub outer: f64,
}

impl Cutoff {
    pub fn new(inner: f64, outer: f64) -> Result<Self> {
        if !(inner > 0.0 && outer > inner && outer.is_finite()) {
            return Err(Error::ConfigInvalid(format!(
                "cutoff needs 0 < inner < outer, got {inner}, {outer}"
            )));
        }
        Ok(Self { inner, outer })
    }

    /// `(chi(x), chi'(x))`.
    #[inline]
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let ax = x.abs();
        if ax <= self.inner {
            return (1.0, 0.0);
        }
        if ax >= self.outer {
            return (0.0, 0.0);
        }
        let width = self.outer - self.inner;
        let (v, d) = smooth_step((self.outer - ax) / width);
        (v, -sign0(x) * d / width)
    }
}

/// `F` with a weak derivative `dF/dx` and a time derivative `dF/dt`.
///
/// `half_width` bounds the support of `dF/dx` (after localization); it is the
/// box used for local-time integrals and certificates. `F` itself may be
/// nonzero outside it (constants, `|x| ^ 1`).
#[derive(Clone)]
pub struct WeakDiffFunction {
    name: String,
    value: Field2,
    dx: Field2,
    dt: Field2,
    half_width: f64,
    cutoff: Option<Cutoff>,
    smoothness: Smoothness,
}

impl std::fmt::Debug for WeakDiffFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WeakDiffFunction")
            .field("name", &self.name)
            .field("half_width", &self.half_width)
            .field("cutoff", &self.cutoff)
            .finish_non_exhaustive()
    }
}

impl WeakDiffFunction {
    pub fn new(
        name: impl Into<String>,
        half_width: f64,
        smoothness: Smoothness,
        value: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        dx: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        dt: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::ConfigInvalid(format!("half width {half_width}")));
        }
        Ok(Self {
            name: name.into(),
            value: Arc::new(value),
            dx: Arc::new(dx),
            dt: Arc::new(dt),
            half_width,
            cutoff: None,
            smoothness,
        })
    }

    /// `F * chi` with `d/dx (F chi) = F_x chi + F chi'`. The support box
    /// becomes `[-outer, outer]`.
    pub fn localized(&self, cutoff: Cutoff) -> Self {
        Self {
            name: format!("{}*cutoff", self.name),
            half_width: cutoff.outer,
            cutoff: Some(cutoff),
            ..self.clone()
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn cutoff(&self) -> Option<Cutoff> {
        self.cutoff
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    #[inline]
    pub fn value(&self, x: f64, t: f64) -> f64 {
        match self.cutoff {
            None => (self.value)(x, t),
            Some(c) => {
                let (chi, _) = c.eval(x);
                if chi == 0.0 {
                    0.0
                } else {
                    chi * (self.value)(x, t)
                }
            }
        }
    }

    #[inline]
    pub fn dx(&self, x: f64, t: f64) -> f64 {
        match self.cutoff {
            None => (self.dx)(x, t),
            Some(c) => {
                let (chi, dchi) = c.eval(x);
                if chi == 0.0 {
                    return 0.0;
                }
                let mut v = chi * (self.dx)(x, t);
                if dchi != 0.0 {
                    v += dchi * (self.value)(x, t);
                }
                v
            }
        }
    }

    #[inline]
    pub fn dt(&self, x: f64, t: f64) -> f64 {
        match self.cutoff {
            None => (self.dt)(x, t),
            Some(c) => {
                let (chi, _) = c.eval(x);
                if chi == 0.0 {
                    0.0
                } else {
                    chi * (self.dt)(x, t)
                }
            }
        }
    }

    /// `dF/dx` as a space-time function on the support box.
    pub fn dx_function(&self) -> SpaceTimeFunction {
        let me = self.clone();
        SpaceTimeFunction::new(
            format!("d/dx {}", self.name),
            self.half_width,
            self.smoothness,
            move |x, s| me.dx(x, s),
        )
        .expect("half width validated at construction")
    }

    /// Checks `int int |F_t| s^{-1/2}` and `int int F_x^2 s^{-1/2}` over
    /// `[-A-1, A+1] x [0, 1]` by refinement; `CertificateFailure` if either
    /// diverges.
    pub fn certify(&self) -> Result<Certificates> {
        let a = self.half_width + 1.0;
        let run = |label: &str, g: &dyn Fn(f64, f64) -> f64| {
            refine_nonnegative(g, (-a, a), (0.0, 1.0), (16, 16), 5, TimeWeight::InvSqrt)
                .map(|r| r.value)
                .map_err(|last| {
                    Error::CertificateFailure(format!("{}: {label} diverges (last estimate {last})", self.name))
                })
        };
        let time = run("int |F_t| s^-1/2", &|x, s| self.dt(x, s).abs())?;
        let space = run("int F_x^2 s^-1/2", &|x, s| {
            let d = self.dx(x, s);
            d * d
        })?;
        Ok(Certificates {
            time_derivative: time,
            space_derivative: space,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Certificates {
    pub time_derivative: f64,
    pub space_derivative: f64,
}

/// Built-in functions, addressable by name from configuration files.
pub mod catalog {
    use super::*;

    pub const NAMES: [&str; 8] = [
        "zero",
        "constant",
        "identity",
        "square",
        "abs",
        "abs-trunc",
        "time-abs-trunc",
        "pos-trunc",
    ];

    fn make(
        name: &str,
        a: f64,
        sm: Smoothness,
        v: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        dx: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        dt: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> WeakDiffFunction {
        WeakDiffFunction::new(name, a, sm, v, dx, dt).expect("catalog half widths are positive")
    }

    pub fn zero() -> WeakDiffFunction {
        make("zero", 1.0, Smoothness::Smooth, |_, _| 0.0, |_, _| 0.0, |_, _| 0.0)
    }

    pub fn constant(c: f64) -> WeakDiffFunction {
        make(
            "constant",
            1.0,
            Smoothness::Smooth,
            move |_, _| c,
            |_, _| 0.0,
            |_, _| 0.0,
        )
    }

    /// `x * chi(x)`.
    pub fn identity(cutoff: Cutoff) -> WeakDiffFunction {
        make("identity", 1.0, Smoothness::Smooth, |x, _| x, |_, _| 1.0, |_, _| 0.0).localized(cutoff)
    }

    /// `x^2 * chi(x)`.
    pub fn square(cutoff: Cutoff) -> WeakDiffFunction {
        make(
            "square",
            1.0,
            Smoothness::Smooth,
            |x, _| x * x,
            |x, _| 2.0 * x,
            |_, _| 0.0,
        )
        .localized(cutoff)
    }

    /// `|x| * chi(x)`.
    pub fn abs(cutoff: Cutoff) -> WeakDiffFunction {
        make(
            "abs",
            1.0,
            Smoothness::Continuous,
            |x, _| x.abs(),
            |x, _| sign0(x),
            |_, _| 0.0,
        )
        .localized(cutoff)
    }

    /// `|x| ^ 1`; its derivative lives on `[-1, 1]`.
    pub fn abs_trunc() -> WeakDiffFunction {
        make(
            "abs-trunc",
            2.0,
            Smoothness::Continuous,
            |x, _| x.abs().min(1.0),
            |x, _| if x.abs() < 1.0 { sign0(x) } else { 0.0 },
            |_, _| 0.0,
        )
    }

    /// `(1 + t)(|x| ^ 1)`.
    pub fn time_abs_trunc() -> WeakDiffFunction {
        make(
            "time-abs-trunc",
            2.0,
            Smoothness::Continuous,
            |x, t| (1.0 + t) * x.abs().min(1.0),
            |x, t| if x.abs() < 1.0 { (1.0 + t) * sign0(x) } else { 0.0 },
            |x, _| x.abs().min(1.0),
        )
    }

    /// `max(x, 0) ^ 1`.
    pub fn pos_trunc() -> WeakDiffFunction {
        make(
            "pos-trunc",
            2.0,
            Smoothness::Continuous,
            |x, _| x.clamp(0.0, 1.0),
            |x, _| if x > 0.0 && x < 1.0 { 1.0 } else { 0.0 },
            |_, _| 0.0,
        )
    }

    /// Looks up a catalog entry; functions needing a cutoff use `cutoff`.
    pub fn by_name(name: &str, constant: f64, cutoff: Cutoff) -> Result<WeakDiffFunction> {
        Ok(match name {
            "zero" => zero(),
            "constant" => super::catalog::constant(constant),
            "identity" => identity(cutoff),
            "square" => square(cutoff),
            "abs" => abs(cutoff),
            "abs-trunc" => abs_trunc(),
            "time-abs-trunc" => time_abs_trunc(),
            "pos-trunc" => pos_trunc(),
            other => {
                return Err(Error::ConfigInvalid(format!(
                    "unknown function '{other}', expected one of {}",
                    NAMES.join(", ")
                )))
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_is_smooth_and_consistent() {
        let c = Cutoff::new(1.0, 2.0).unwrap();
        assert_eq!(c.eval(0.5), (1.0, 0.0));
        assert_eq!(c.eval(-3.0), (0.0, 0.0));
        let h = 1e-6;
        for x in [-1.9, -1.5, -1.1, 1.2, 1.5, 1.8] {
            let fd = (c.eval(x + h).0 - c.eval(x - h).0) / (2.0 * h);
            assert!((fd - c.eval(x).1).abs() < 1e-6, "x={x}");
        }
    }

    #[test]
    fn localized_derivative_matches_finite_differences() {
        let f = catalog::square(Cutoff::new(1.0, 2.0).unwrap());
        let h = 1e-6;
        for x in [-1.7, -0.3, 0.9, 1.4, 1.95] {
            let fd = (f.value(x + h, 0.0) - f.value(x - h, 0.0)) / (2.0 * h);
            assert!((fd - f.dx(x, 0.0)).abs() < 1e-5, "x={x}");
        }
        assert_eq!(f.half_width(), 2.0);
    }

    #[test]
    fn certificates() {
        for f in [
            catalog::abs_trunc(),
            catalog::time_abs_trunc(),
            catalog::pos_trunc(),
            catalog::zero(),
        ] {
            f.certify().unwrap();
        }
        let bad = WeakDiffFunction::new(
            "bad",
            1.0,
            Smoothness::Continuous,
            |_, _| 0.0,
            |_, _| 0.0,
            |x: f64, t: f64| {
                if x.abs() < 1.0 {
                    1.0 / t
                } else {
                    0.0
                }
            },
        )
        .unwrap();
        assert!(matches!(bad.certify(), Err(Error::CertificateFailure(_))));
    }
}
