//! Fractional Brownian motion: covariance structure, the kernel `K_H` and
//! operator `K*_H`, inner products of the associated Hilbert space, and
//! exact Gaussian path sampling.

mod covariance;
mod export;
mod inner;
mod kernel;
mod kstar;
mod sampler;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

pub use covariance::{
    covariance_rh, fgn_autocovariance, increment_covariance, IncrementCovariance,
};
pub use export::{read_batch_binary, write_batch_binary, write_batch_csv};
pub use inner::{inner_product_h, InnerMethod};
pub use kernel::{kernel_kh, kernel_kh_dt, DhCalibration, KernelKh, DH_CALIBRATION_TOL};
pub use kstar::{kstar_apply, KStarImage, KStarOperator};
pub use sampler::{sample_paths, FbmBatch, FbmPath, FbmSampler, SamplerRoute};

pub(crate) use covariance::rh;

/// Hurst index `H ∈ (0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Hurst(f64);

impl Hurst {
    pub fn new(h: f64) -> Result<Self> {
        if !(h > 0.0 && h < 1.0) {
            return domain(format!("Hurst index must lie in (0, 1), got {h}"));
        }
        Ok(Self(h))
    }

    /// Brownian motion.
    pub const fn half() -> Self {
        Self(0.5)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_half(self) -> bool {
        self.0 == 0.5
    }

    /// `α_H = H(2H - 1)`.
    pub fn alpha(self) -> f64 {
        self.0 * (2.0 * self.0 - 1.0)
    }
}

impl TryFrom<f64> for Hurst {
    type Error = crate::Error;

    fn try_from(h: f64) -> Result<Self> {
        Self::new(h)
    }
}

impl From<Hurst> for f64 {
    fn from(h: Hurst) -> f64 {
        h.0
    }
}

impl std::fmt::Display for Hurst {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}
