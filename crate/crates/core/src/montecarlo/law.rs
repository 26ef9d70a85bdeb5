use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, usage, Result};
use crate::integrals::{IntegrandSpec, MultiParam};
use crate::rng::{stream_rng, REFERENCE_PATH_STREAM, REFERENCE_Z_STREAM};
use crate::specfun::{factorial, hermite, HermiteOrder};

/// How the random factor `u` of the limit is drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum U1Descriptor {
    Deterministic {
        value: f64,
    },
    /// `B′(t)` for an independent copy `B′`.
    TerminalPath,
    /// `f(B′(t))`, `f(x) = Σ coeffs[k] x^k`.
    PolynomialOfTerminal {
        coeffs: Vec<f64>,
    },
}

impl U1Descriptor {
    /// Terminal value of an integrand.
    pub fn from_integrand(u: &IntegrandSpec) -> Result<Self> {
        Ok(match u {
            IntegrandSpec::Constant { value } => Self::Deterministic { value: *value },
            IntegrandSpec::Deterministic { node_values } => Self::Deterministic {
                value: *node_values.last().expect("nonempty"),
            },
            IntegrandSpec::PathLinear
            | IntegrandSpec::Multi {
                param: MultiParam::FirstArgPath,
            } => Self::TerminalPath,
            IntegrandSpec::Multi {
                param: MultiParam::One,
            } => Self::Deterministic { value: 1.0 },
            IntegrandSpec::Polynomial { coeffs } => Self::PolynomialOfTerminal {
                coeffs: coeffs.clone(),
            },
        })
    }

    fn draw(&self, b: f64) -> f64 {
        match self {
            Self::Deterministic { value } => *value,
            Self::TerminalPath => b,
            Self::PolynomialOfTerminal { coeffs } => {
                coeffs.iter().rev().fold(0.0, |acc, c| acc * b + c)
            }
        }
    }
}

/// `(m!)⁻¹ L^{m/2} u H_m(Z)` with `Z ~ N(0, 1)` independent of `u`, where `u`
/// is evaluated at `B′(time)`, `B′(time) ~ N(0, time^{2H})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitLaw {
    #[serde(rename = "L")]
    pub l: f64,
    pub hermite_order: HermiteOrder,
    pub u1: U1Descriptor,
    /// Standard deviation of `B′` at the evaluation time.
    #[serde(default = "unit")]
    pub path_sd: f64,
}

fn unit() -> f64 {
    1.0
}

impl LimitLaw {
    pub fn new(l: f64, m: u32, u1: U1Descriptor) -> Result<Self> {
        if !(l > 0.0 && l.is_finite()) {
            return domain(format!("limit constant L must be positive, got {l}"));
        }
        if m == 0 {
            return usage("the Hermite order of a limit law is at least 1");
        }
        Ok(Self {
            l,
            hermite_order: HermiteOrder::new(m)?,
            u1,
            path_sd: 1.0,
        })
    }

    /// Evaluate `u` at a time where `B′` has standard deviation `sd`.
    pub fn with_path_sd(mut self, sd: f64) -> Self {
        self.path_sd = sd;
        self
    }

    /// `(m!)⁻¹ L^{m/2}`.
    pub fn normalization(&self) -> f64 {
        let m = self.hermite_order.get();
        self.l.powf(f64::from(m) / 2.0) / factorial(m)
    }

    /// `E[u²]`.
    pub fn u_second_moment(&self) -> f64 {
        let s2 = self.path_sd * self.path_sd;
        match &self.u1 {
            U1Descriptor::Deterministic { value } => value * value,
            U1Descriptor::TerminalPath => s2,
            U1Descriptor::PolynomialOfTerminal { coeffs } => {
                let mut sq = vec![0.0; 2 * coeffs.len()];
                for (i, a) in coeffs.iter().enumerate() {
                    for (j, b) in coeffs.iter().enumerate() {
                        sq[i + j] += a * b;
                    }
                }
                sq.iter()
                    .enumerate()
                    .map(|(k, c)| {
                        c * crate::specfun::normal_moment(k as u32) * s2.powi(k as i32 / 2)
                    })
                    .sum()
            }
        }
    }

    /// `(m!)⁻² L^m E[u²] E[H_m(Z)²] = L^m E[u²] / m!`.
    pub fn variance(&self) -> f64 {
        let m = self.hermite_order.get();
        self.l.powi(m as i32) * self.u_second_moment() / factorial(m)
    }

    pub fn draw(&self, b: f64, z: f64) -> f64 {
        self.normalization() * self.u1.draw(b) * hermite(self.hermite_order, z)
    }
}

/// `count` independent draws; `u` and `Z` come from separate reference
/// streams, disjoint from the path stream.
pub fn sample_limit_law(law: &LimitLaw, count: usize, seed: u64) -> Result<Vec<f64>> {
    if count == 0 {
        return usage("sample_limit_law needs count ≥ 1");
    }
    Ok((0..count as u64)
        .into_par_iter()
        .map(|i| {
            let b: f64 = stream_rng(seed, REFERENCE_PATH_STREAM, i).sample(StandardNormal);
            let z: f64 = stream_rng(seed, REFERENCE_Z_STREAM, i).sample(StandardNormal);
            law.draw(law.path_sd * b, z)
        })
        .collect())
}
