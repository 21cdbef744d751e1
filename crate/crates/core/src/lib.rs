//! Distributions of weighted sums of independent random variables via
//! Fourier inversion of characteristic functions stored as quantized tensor
//! trains, with dense, Monte Carlo and convolution baselines.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod engine;
pub mod error;
pub mod fourier;
pub mod grid;
pub mod linalg;
pub mod models;
pub mod risk;
pub mod tt;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use num_complex::Complex64 as c64;
