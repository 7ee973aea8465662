//! Threshold-one contact processes on tori and regular trees: exact
//! simulation under shared Poisson clocks, the counting and dual systems,
//! random-walk Green functions, and the second-moment bounds built on them.

// `!(x > 0.0)` style guards are kept on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod clocks;
pub mod error;
pub mod experiments;
pub mod graphs;
pub mod moments;
pub mod processes;
pub mod rng;
pub mod stats;
pub mod walk;

pub use error::{Error, Result};
