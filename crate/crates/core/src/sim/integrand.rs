use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Adapted functional of time and the Brownian path observed so far.
/// The slice holds `W` at grid points `0..=i`; the last entry is `W_t`.
pub type PathFunctional = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum IntegrandKind {
    /// `u_t = sigma`.
    Constant { sigma: f64 },
    /// `u_t = rho + eps * (1 + sin W_t) / 2`, so `rho <= u_t <= rho + eps`.
    BoundedSine { rho: f64, eps: f64 },
    /// User functional with declared bounds on `|u|`. Its regularity is not checked.
    Custom {
        name: String,
        rho: f64,
        upper: f64,
        functional: PathFunctional,
    },
}

impl fmt::Debug for IntegrandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant { sigma } => write!(f, "Constant({sigma})"),
            Self::BoundedSine { rho, eps } => write!(f, "BoundedSine({rho}, {eps})"),
            Self::Custom { name, rho, upper, .. } => write!(f, "Custom({name}, [{rho}, {upper}])"),
        }
    }
}

/// Integrand `u` of the martingale `X_t = int_0^t u_s dW_s`.
#[derive(Debug, Clone)]
pub struct IntegrandSpec {
    kind: IntegrandKind,
}

/// Serializable description of the built-in integrands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum IntegrandConfig {
    Constant { sigma: f64 },
    BoundedSine { rho: f64, eps: f64 },
}

impl IntegrandConfig {
    pub fn build(self) -> Result<IntegrandSpec> {
        match self {
            Self::Constant { sigma } => IntegrandSpec::constant(sigma),
            Self::BoundedSine { rho, eps } => IntegrandSpec::bounded_sine(rho, eps),
        }
    }
}

impl IntegrandSpec {
    pub fn constant(sigma: f64) -> Result<Self> {
        if !(sigma.abs() > 0.0) {
            return Err(Error::NonpositiveRho(sigma.abs()));
        }
        Ok(Self {
            kind: IntegrandKind::Constant { sigma },
        })
    }

    pub fn bounded_sine(rho: f64, eps: f64) -> Result<Self> {
        if !(rho > 0.0) {
            return Err(Error::NonpositiveRho(rho));
        }
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::ConfigInvalid(format!("bounded-sine amplitude {eps}")));
        }
        Ok(Self {
            kind: IntegrandKind::BoundedSine { rho, eps },
        })
    }

    pub fn custom(name: impl Into<String>, rho: f64, upper: f64, functional: PathFunctional) -> Result<Self> {
        if !(rho > 0.0) {
            return Err(Error::NonpositiveRho(rho));
        }
        if !(upper >= rho) {
            return Err(Error::ConfigInvalid(format!("upper bound {upper} below rho {rho}")));
        }
        Ok(Self {
            kind: IntegrandKind::Custom {
                name: name.into(),
                rho,
                upper,
                functional,
            },
        })
    }

    pub fn kind(&self) -> &IntegrandKind {
        &self.kind
    }

    pub fn rho(&self) -> f64 {
        match &self.kind {
            IntegrandKind::Constant { sigma } => sigma.abs(),
            IntegrandKind::BoundedSine { rho, .. } => *rho,
            IntegrandKind::Custom { rho, .. } => *rho,
        }
    }

    pub fn upper(&self) -> f64 {
        match &self.kind {
            IntegrandKind::Constant { sigma } => sigma.abs(),
            IntegrandKind::BoundedSine { rho, eps } => rho + eps,
            IntegrandKind::Custom { upper, .. } => *upper,
        }
    }

    /// Catalog members satisfy the regularity and nondegeneracy hypotheses by
    /// construction; user functionals are flagged as unverified.
    pub fn hypotheses_verified(&self) -> bool {
        !matches!(self.kind, IntegrandKind::Custom { .. })
    }

    /// Short identifier used in dumps and reports.
    pub fn id(&self) -> String {
        match &self.kind {
            IntegrandKind::Constant { sigma } => format!("constant({sigma})"),
            IntegrandKind::BoundedSine { rho, eps } => format!("bounded-sine({rho},{eps})"),
            IntegrandKind::Custom { name, .. } => format!("custom({name})"),
        }
    }

    /// Numeric tag written into binary path dumps.
    pub fn numeric_id(&self) -> u64 {
        match &self.kind {
            IntegrandKind::Constant { .. } => 1,
            IntegrandKind::BoundedSine { .. } => 2,
            IntegrandKind::Custom { .. } => 3,
        }
    }

    pub fn is_constant(&self) -> Option<f64> {
        match self.kind {
            IntegrandKind::Constant { sigma } => Some(sigma),
            _ => None,
        }
    }

    /// Value of `u` at time `t` given `W` on the grid up to and including `t`.
    #[inline]
    pub fn eval(&self, t: f64, w_history: &[f64]) -> f64 {
        match &self.kind {
            IntegrandKind::Constant { sigma } => *sigma,
            IntegrandKind::BoundedSine { rho, eps } => {
                let w = *w_history.last().unwrap_or(&0.0);
                rho + eps * (1.0 + w.sin()) / 2.0
            }
            IntegrandKind::Custom { functional, .. } => functional(t, w_history),
        }
    }

    pub(crate) fn check_bounds(&self, t: f64, value: f64) -> Result<()> {
        let lower = self.rho();
        let upper = self.upper();
        let a = value.abs();
        let slack = 1e-12 * upper.max(1.0);
        if !(a >= lower - slack && a <= upper + slack) {
            return Err(Error::BoundViolation { t, value, lower, upper });
        }
        Ok(())
    }
}
