//! Brownian paths and nondegenerate martingales `X_t = int_0^t u_s dW_s`.

mod density;
mod grid;
mod integrand;
pub mod io;
mod path;

pub use density::{empirical_density_bound, histogram_density, DensityEstimate};
pub use grid::{StepProfile, TimeGrid, TIME_TOL};
pub use integrand::{IntegrandConfig, IntegrandKind, IntegrandSpec, PathFunctional};
pub use path::{simulate_path, simulate_value_at, SamplePath};
