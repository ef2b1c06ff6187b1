//! Multi-scale exploratory measures over convex bodies, Monte-Carlo checks of
//! their exploration guarantee, and a Bayesian bandit convex optimization
//! simulator built on them.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bandit;
pub mod calibration;
pub mod cli;
pub mod conic;
pub mod convexfn;
pub mod error;
pub mod explore1d;
pub mod explore_nd;
pub mod geometry;
pub mod instances;
pub mod linalg;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
