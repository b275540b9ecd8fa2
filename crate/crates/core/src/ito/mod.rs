//! Generalized Ito formula for weakly differentiable `F(x, t)`.

pub mod chain;
pub mod covariation;
pub mod formula;
pub mod mollifier;
pub mod weak;

pub use chain::{verify_smooth_ito_chain, ChainRow, ChainTable, SmoothTerms};
pub use covariation::{quadratic_covariation, time_integral_f, CovariationEstimate, CovariationPlan, RATIO_CAP};
pub use formula::{
    ito_residual, ito_stochastic_integral, time_integral_dt, ItoConfig, ItoReport, ItoTerms, ResidualPlan, TERM_NAMES,
};
pub use mollifier::{mollify, BaseKernel, LatticeSpec, MollifiedFunction, MollifierKernel};
pub use weak::{catalog, Certificates, Cutoff, WeakDiffFunction};
