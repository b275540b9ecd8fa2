//! Monte Carlo toolkit for local times of continuous martingales
//! `X_t = int_0^t u dW`: simulation, partition families, local-time fields,
//! integration against local time and a generalized Ito formula for weakly
//! differentiable functions.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(a > b)` deliberately rejects NaN

pub mod error;
pub mod harness;
pub mod ito;
pub mod local_time;
pub mod lt_integral;
pub mod partitions;
pub mod quadrature;
pub mod sim;

pub use error::{Error, Result};
