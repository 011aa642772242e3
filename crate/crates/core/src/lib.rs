//! Tunable-complexity generative priors for inverse problems.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diffusion;
pub mod error;
pub mod tensor;
pub mod forward;
pub mod harness;
pub mod inversion;
pub mod models;
pub mod persist;
pub mod theory;

pub use error::{Error, Result};
