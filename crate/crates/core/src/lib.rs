//! Multi-level quantum thermal machines built from two-qubit "virtual qubit"
//! machines.
//!
//! The crate covers the analytic side (virtual temperatures, effective reset
//! master equations and their closed-form steady states) and the numerical
//! side (full composite reset and GKLS dynamics, steady states, and fitting
//! of effective rates to the composite model), plus a three-level laser study.
//!
//! Units: `ħ = k_B = 1`.

// `!(x > 0.0)` rejects NaN along with the ordinary failures
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod dynamics;
pub mod effrme;
pub mod error;
pub mod laser;
pub mod operator;
pub mod ratefit;
pub mod virtual_qubit;

pub use error::{Error, Result};
