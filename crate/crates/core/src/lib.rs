//! Steady-state and transient Gaussian dynamics of two cavity arrays driven by
//! the two-mode squeezed output of a nondegenerate parametric oscillator.
//!
//! Rates are plain `f64` in whatever unit the caller picks; every formula is
//! homogeneous, so only ratios matter.

// `!(x > y)` is how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod array;
pub mod error;
pub mod gaussian;
pub mod linalg;
pub mod reservoir;
pub mod steady;

pub use error::{Error, Result};
