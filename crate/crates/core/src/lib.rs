//! Numerical kernels, operators and discretized stochastic integrals for
//! singular limit theorems driven by fractional Brownian motion, with a
//! Monte Carlo verification layer.

// `!(x > 0.0)` deliberately rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::excessive_precision)]

pub mod error;
pub mod fbm;
pub mod grid;
pub mod integrals;
pub mod kernels;
pub mod montecarlo;
pub mod quad;
pub mod rng;
pub mod specfun;

pub use error::{Error, Result};
pub use fbm::Hurst;
pub use grid::{CellFunction, GridSpec};
