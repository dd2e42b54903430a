// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adversary;
pub mod concept;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod learner;
pub mod metric;
pub mod rng;

pub use error::{Error, Result};
