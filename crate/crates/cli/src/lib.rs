//! Configuration ingestion and result emission for the `simulate` binary.

// `!(x > y)` is how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod run;
