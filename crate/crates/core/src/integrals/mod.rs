//! Discretized stochastic integrals against a sampled path.
//!
//! Deterministic kernels enter every sum through per-cell weights `phi[i]`,
//! the exact average of the kernel over cell `i` (see
//! [`KernelSequence::cell_averages`](crate::kernels::KernelSequence::cell_averages)).
//! Random integrands are always evaluated at the left end of the cell.

mod convolution;
mod sums;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};
use crate::fbm::FbmPath;
use crate::specfun::normal_moment;

pub use convolution::{stochastic_convolution, Mollifier, MollifierKind};
pub use sums::{
    exact_wick_variance, iterated_ito_sum, iterated_step_integral, ito_forward_sum,
    second_chaos_hermite, skorohod_wick_sum, skorohod_wick_sum_frozen, Freeze, NormConvention,
    MAX_ITERATED_ORDER,
};

/// Integrand of a multiple integral, a function of the earliest time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MultiParam {
    /// `u ≡ 1`.
    One,
    /// `u_{t₁,…,t_m} = B(t₁)`.
    FirstArgPath,
}

/// The stochastic integrand `u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum IntegrandSpec {
    /// `u ≡ value`.
    Constant { value: f64 },
    /// Deterministic `g(t_k)` given at the grid nodes.
    Deterministic { node_values: Vec<f64> },
    /// `u_t = B(t)`.
    PathLinear,
    /// `u_t = f(B(t))` with `f(x) = Σ_k coeffs[k] x^k`.
    Polynomial { coeffs: Vec<f64> },
    /// Integrand of an iterated integral.
    Multi { param: MultiParam },
}

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, ck| acc * x + ck)
}

fn poly_derivative(c: &[f64], x: f64) -> f64 {
    c.iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (k, ck)| acc * x + k as f64 * ck)
}

impl IntegrandSpec {
    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        Self::Polynomial { coeffs }
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self, Self::Constant { .. } | Self::Deterministic { .. })
    }

    /// Whether `u` depends on the path (and the Skorohod sum needs a trace
    /// correction).
    pub fn is_path_dependent(&self) -> bool {
        !self.is_deterministic()
    }

    pub(crate) fn check_single(&self, n_points: usize) -> Result<()> {
        match self {
            Self::Multi { .. } => usage("a multiple-integral integrand needs iterated_ito_sum"),
            Self::Deterministic { node_values } if node_values.len() != n_points => usage(format!(
                "deterministic integrand has {} values for {} grid points",
                node_values.len(),
                n_points
            )),
            _ => Ok(()),
        }
    }

    /// `u(t_k)` on `path`.
    pub fn at_node(&self, path: &FbmPath, k: usize) -> f64 {
        let b = path.values()[k];
        match self {
            Self::Constant { value } => *value,
            Self::Deterministic { node_values } => node_values[k],
            Self::PathLinear => b,
            Self::Polynomial { coeffs } => poly(coeffs, b),
            Self::Multi {
                param: MultiParam::One,
            } => 1.0,
            Self::Multi {
                param: MultiParam::FirstArgPath,
            } => b,
        }
    }

    /// `f'(B(t_k))`, the density of `D u(t_k)` against `1_{[0,t_k]}`.
    pub fn derivative_factor(&self, path: &FbmPath, k: usize) -> f64 {
        match self {
            Self::Constant { .. }
            | Self::Deterministic { .. }
            | Self::Multi {
                param: MultiParam::One,
            } => 0.0,
            Self::PathLinear
            | Self::Multi {
                param: MultiParam::FirstArgPath,
            } => 1.0,
            Self::Polynomial { coeffs } => poly_derivative(coeffs, path.values()[k]),
        }
    }

    /// `u` at the terminal time given `B(1) = b1`.
    pub fn terminal_value(&self, b1: f64) -> f64 {
        match self {
            Self::Constant { value } => *value,
            Self::Deterministic { node_values } => node_values[node_values.len() - 1],
            Self::PathLinear
            | Self::Multi {
                param: MultiParam::FirstArgPath,
            } => b1,
            Self::Polynomial { coeffs } => poly(coeffs, b1),
            Self::Multi {
                param: MultiParam::One,
            } => 1.0,
        }
    }

    /// `E[u_1²]` under `B(1) ~ N(0, 1)`.
    pub fn terminal_second_moment(&self) -> f64 {
        match self {
            Self::Constant { value } => value * value,
            Self::Deterministic { node_values } => node_values[node_values.len() - 1].powi(2),
            Self::PathLinear
            | Self::Multi {
                param: MultiParam::FirstArgPath,
            } => 1.0,
            Self::Multi {
                param: MultiParam::One,
            } => 1.0,
            Self::Polynomial { coeffs } => {
                let mut sq = vec![0.0; 2 * coeffs.len()];
                for (i, a) in coeffs.iter().enumerate() {
                    for (j, b) in coeffs.iter().enumerate() {
                        sq[i + j] += a * b;
                    }
                }
                sq.iter()
                    .enumerate()
                    .map(|(k, c)| c * normal_moment(k as u32))
                    .sum()
            }
        }
    }
}

/// One realization of a discretized integral. When present, the forward and
/// trace components add up to `value`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralSample {
    pub value: f64,
    pub path_id: u64,
    pub n: u32,
    pub forward_component: Option<f64>,
    pub trace_component: Option<f64>,
}

impl IntegralSample {
    pub(crate) fn plain(value: f64) -> Self {
        Self {
            value,
            path_id: 0,
            n: 0,
            forward_component: None,
            trace_component: None,
        }
    }

    pub fn tagged(mut self, path_id: u64, n: u32) -> Self {
        self.path_id = path_id;
        self.n = n;
        self
    }
}

/// CSV: `experiment_id,path_id,n,value,forward_component,trace_component`,
/// empty fields for missing components.
pub fn write_samples_csv<W: Write>(
    experiment_id: &str,
    samples: &[IntegralSample],
    mut out: W,
) -> Result<()> {
    writeln!(
        out,
        "experiment_id,path_id,n,value,forward_component,trace_component"
    )?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
    for s in samples {
        writeln!(
            out,
            "{experiment_id},{},{},{:e},{},{}",
            s.path_id,
            s.n,
            s.value,
            opt(s.forward_component),
            opt(s.trace_component)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_second_moment() {
        // (1 + 2x + x²)² = 1 + 4x + 6x² + 4x³ + x⁴, so E = 1 + 6 + 3
        let u = IntegrandSpec::polynomial(vec![1.0, 2.0, 1.0]);
        assert_eq!(u.terminal_second_moment(), 10.0);
        assert_eq!(poly_derivative(&[1.0, 2.0, 1.0], 3.0), 8.0);
        assert_eq!(poly_derivative(&[5.0], 3.0), 0.0);
    }

    #[test]
    fn csv_rows() {
        let s = IntegralSample {
            value: 1.5,
            path_id: 3,
            n: 64,
            forward_component: Some(2.0),
            trace_component: Some(-0.5),
        };
        let mut buf = Vec::new();
        write_samples_csv(
            "exp",
            &[s, IntegralSample::plain(0.25).tagged(4, 64)],
            &mut buf,
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[1], "exp,3,64,1.5e0,2e0,-5e-1");
        assert_eq!(lines[2], "exp,4,64,2.5e-1,,");
    }
}
