//! Smoothed Lasso and smoothed adaptive Lasso estimators for time-courses of
//! high-dimensional linear models, with the simulation harness used to
//! compare them.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod benchmark;
pub mod error;
pub mod estimators;
pub mod io;
pub mod metrics;
pub mod simulation;
pub mod smoothing;
pub mod solver;
pub mod tuning;

pub use error::{Error, Result};
