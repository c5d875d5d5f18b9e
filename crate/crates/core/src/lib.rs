//! Metric geometry and metric entropy of homogeneous spaces of U(n) and SO(n).

// negated comparisons reject NaN alongside out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod entropy;
pub mod error;
pub mod groups;
pub mod invariants;
pub mod matcore;
pub mod metrics;
pub mod verify;

pub use error::{Error, Result};
