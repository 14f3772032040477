//! Sum-of-branches statistics for Málaga turbulence channels with pointing errors.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aser;
pub mod channel;
pub mod cli;
pub mod error;
pub mod fit;
pub mod mgf;
pub mod monte_carlo;
pub mod special;

pub use error::{Error, Result};
