use serde::{Deserialize, Serialize};

use super::law::LimitLaw;
use super::stats::moments_with_se;
use crate::error::{usage, Result};
use crate::fbm::FbmPath;

/// Bounded path functionals used as the test variable `Z` in
/// `E[Z e^{iλF}]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ZWeight {
    One,
    /// `1{B(1/2) > 0}`.
    PositiveAtHalf,
    /// `cos(B(t0))`.
    CosAt {
        t0: f64,
    },
}

impl Default for ZWeight {
    fn default() -> Self {
        Self::CosAt { t0: 0.5 }
    }
}

impl ZWeight {
    pub fn eval(&self, path: &FbmPath) -> f64 {
        match *self {
            Self::One => 1.0,
            Self::PositiveAtHalf => f64::from(u8::from(path.at(0.5) > 0.0)),
            Self::CosAt { t0 } => path.at(t0).cos(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharFnResult {
    pub lambda: f64,
    /// `E[Z e^{iλF}]` as `[re, im]`.
    pub empirical: [f64; 2],
    /// `E[Z exp(-λ² L u² / 2)]`.
    pub closed_form: f64,
    pub distance: f64,
    pub combined_se: f64,
    /// `distance < 4 · combined_se`.
    pub within_threshold: bool,
}

/// Compare the empirical stable characteristic functional of `f` with the
/// conditionally Gaussian limit, both estimated over the same paths.
/// `weights[k]` is `Z` on path `k` and `u1[k]` the terminal integrand.
pub fn stable_char_functional(
    f: &[f64],
    weights: &[f64],
    u1: &[f64],
    lambda: f64,
    law: &LimitLaw,
) -> Result<CharFnResult> {
    if law.hermite_order.get() != 1 {
        return usage("no closed form for m ≥ 2; use the two-sample tests instead");
    }
    if f.len() != weights.len() || f.len() != u1.len() {
        return usage("char functional inputs must have equal lengths");
    }
    let re: Vec<f64> = f
        .iter()
        .zip(weights)
        .map(|(x, z)| z * (lambda * x).cos())
        .collect();
    let im: Vec<f64> = f
        .iter()
        .zip(weights)
        .map(|(x, z)| z * (lambda * x).sin())
        .collect();
    let cf: Vec<f64> = weights
        .iter()
        .zip(u1)
        .map(|(z, u)| z * (-0.5 * lambda * lambda * law.l * u * u).exp())
        .collect();
    let (re, im, cf) = (
        moments_with_se(&re)?,
        moments_with_se(&im)?,
        moments_with_se(&cf)?,
    );
    let distance = (re.mean - cf.mean).hypot(im.mean);
    let combined_se = (re.se_mean.powi(2) + im.se_mean.powi(2) + cf.se_mean.powi(2)).sqrt();
    Ok(CharFnResult {
        lambda,
        empirical: [re.mean, im.mean],
        closed_form: cf.mean,
        distance,
        combined_se,
        within_threshold: distance < 4.0 * combined_se,
    })
}
