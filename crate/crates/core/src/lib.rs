// NaN-rejecting guards are written as negated comparisons
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod asymptotics;
pub mod bands;
pub mod classical;
pub mod cli;
pub mod error;
pub mod fiber;
pub mod model;
pub mod report;
pub mod stats;
pub mod transport;
pub mod tridiag;

pub use error::{Error, Result};
