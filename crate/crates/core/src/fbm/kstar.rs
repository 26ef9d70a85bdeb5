//! The operator `(K*φ)(s) = K_H(1,s)φ(s) + ∫_s^1 (φ(t) - φ(s)) ∂K_H/∂t(t,s) dt`
//! mapping the fBm Hilbert space isometrically into `L²([0,1])`, for `H < 1/2`.
//!
//! Images are evaluated at cell midpoints. On every cell the smooth factor
//! `(φ(t) - φ(s))(t/s)^{H-1/2}` is replaced by its linear interpolant and
//! integrated exactly against `(t - s)^{H-3/2}`.

use rayon::prelude::*;

use crate::error::{usage, Result};
use crate::fbm::{Hurst, KernelKh};
use crate::grid::{CellFunction, GridSpec};
use crate::quad::gauss_legendre;

/// Cells at least this many widths away from `s` use Gauss–Legendre weights
/// instead of the closed form, which cancels badly there.
const FAR_CELLS: f64 = 4.0;
const FAR_RULE_POINTS: usize = 8;

/// `(∫ (b-x)/(b-a) x^γ dx, ∫ (x-a)/(b-a) x^γ dx)` over `[a, b]`, `a > 0`.
fn piece_weights(a: f64, b: f64, gamma: f64, rule: &(Vec<f64>, Vec<f64>)) -> (f64, f64) {
    let w = b - a;
    if a < FAR_CELLS * w {
        let g1 = gamma + 1.0;
        let g2 = gamma + 2.0;
        let m0 = (b.powf(g1) - a.powf(g1)) / g1;
        let m1 = (b.powf(g2) - a.powf(g2)) / g2;
        ((b * m0 - m1) / w, (m1 - a * m0) / w)
    } else {
        let (mut wa, mut wb) = (0.0, 0.0);
        for (xi, wi) in rule.0.iter().zip(&rule.1) {
            let u = 0.5 * (1.0 + xi);
            let g = 0.5 * wi * w * (a + u * w).powf(gamma);
            wa += (1.0 - u) * g;
            wb += u * g;
        }
        (wa, wb)
    }
}

/// `K*φ` sampled at the midpoints of a grid, with the power-law exponent of
/// each cell that touches a singularity of the image (0 elsewhere).
#[derive(Debug, Clone)]
pub struct KStarImage {
    grid: GridSpec,
    values: Vec<f64>,
    /// Exponent of the singularity at the left end of each cell.
    left_exp: Vec<f64>,
    /// Exponent of the singularity at the right end of each cell.
    right_exp: Vec<f64>,
}

fn singular_factor(beta: f64) -> f64 {
    // ∫_0^h x^β dx over the midpoint value h·(h/2)^β
    if beta == 0.0 {
        1.0
    } else {
        2f64.powf(beta) / (beta + 1.0)
    }
}

impl KStarImage {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn points(&self) -> Vec<f64> {
        self.grid.midpoints()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `∫_0^1 f(s) g(s) ds` by the midpoint rule, corrected on singular cells.
    pub fn l2_inner(&self, other: &KStarImage) -> Result<f64> {
        if self.grid != other.grid {
            return usage("K* images live on different grids");
        }
        let w = self.grid.widths();
        Ok((0..w.len())
            .map(|i| {
                let f = singular_factor(self.left_exp[i] + other.left_exp[i])
                    * singular_factor(self.right_exp[i] + other.right_exp[i]);
                w[i] * self.values[i] * other.values[i] * f
            })
            .sum())
    }

    /// `∫_0^1 |f(s)|^p ds`, midpoint rule with the same correction.
    pub fn lp_integral(&self, p: f64) -> f64 {
        let w = self.grid.widths();
        (0..w.len())
            .map(|i| {
                let f =
                    singular_factor(p * self.left_exp[i]) * singular_factor(p * self.right_exp[i]);
                w[i] * self.values[i].abs().powf(p) * f
            })
            .sum()
    }
}

/// `K*` bound to a grid, caching `K_H(1, ·)` at the midpoints and, on uniform
/// grids, the per-offset singular weights.
#[derive(Debug, Clone)]
pub struct KStarOperator {
    kernel: KernelKh,
    grid: GridSpec,
    k1: Vec<f64>,
    /// `t_k^{H-1/2}` at the nodes (`k ≥ 1`).
    node_pow: Vec<f64>,
    /// Uniform grids: weights of the cell `d` cells to the right of `s`.
    offset_weights: Option<Vec<(f64, f64)>>,
}

impl KStarOperator {
    pub fn new(hurst: Hurst, grid: &GridSpec) -> Result<Self> {
        if hurst.value() >= 0.5 {
            return usage(format!(
                "K* is only used for H < 1/2 (got H={hurst}); use the weighted double integral"
            ));
        }
        if (grid.horizon() - 1.0).abs() > 1e-12 {
            return usage("K* needs a grid on [0, 1]");
        }
        let kernel = KernelKh::new(hurst)?;
        let mids = grid.midpoints();
        let k1 = mids
            .par_iter()
            .map(|&s| kernel.eval(1.0, s))
            .collect::<Result<Vec<f64>>>()?;
        let e = hurst.value() - 0.5;
        let node_pow = grid.times().iter().map(|&t| t.powf(e)).collect();
        let offset_weights = grid.step().map(|h| {
            let rule = gauss_legendre(FAR_RULE_POINTS);
            let gamma = e - 1.0;
            (0..grid.n_intervals())
                .map(|d| {
                    if d == 0 {
                        (0.0, 0.0)
                    } else {
                        let a = (d as f64 - 0.5) * h;
                        piece_weights(a, a + h, gamma, &rule)
                    }
                })
                .collect()
        });
        Ok(Self {
            kernel,
            grid: grid.clone(),
            k1,
            node_pow,
            offset_weights,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn kernel(&self) -> &KernelKh {
        &self.kernel
    }

    /// Apply `K*` to a function on the operator's grid.
    pub fn apply(&self, phi: &CellFunction) -> Result<KStarImage> {
        if phi.grid() != &self.grid {
            return usage("function and operator grids differ");
        }
        let n = self.grid.n_intervals();
        let t = self.grid.times();
        let mids = self.grid.midpoints();
        let (left, right) = (phi.left(), phi.right());
        let e = self.kernel.hurst().value() - 0.5;
        let gamma = e - 1.0;
        let c = self.kernel.d_h() * e;
        let rule = gauss_legendre(FAR_RULE_POINTS);

        let values: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|j| {
                let s = mids[j];
                let phi_s = 0.5 * (left[j] + right[j]);
                let s_neg = s.powf(-e);
                let half = t[j + 1] - s;
                let fb = (right[j] - phi_s) * self.node_pow[j + 1] * s_neg;
                let mut acc = fb * half.powf(gamma + 1.0) / (gamma + 2.0);
                for k in j + 1..n {
                    let fa = (left[k] - phi_s) * self.node_pow[k] * s_neg;
                    let fb = (right[k] - phi_s) * self.node_pow[k + 1] * s_neg;
                    if fa == 0.0 && fb == 0.0 {
                        continue;
                    }
                    let (wa, wb) = match &self.offset_weights {
                        Some(w) => w[k - j],
                        None => piece_weights(t[k] - s, t[k + 1] - s, gamma, &rule),
                    };
                    acc += fa * wa + fb * wb;
                }
                self.k1[j] * phi_s + c * acc
            })
            .collect();

        let mut left_exp = vec![0.0; n];
        let mut right_exp = vec![0.0; n];
        let scale = left
            .iter()
            .chain(right)
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        if left[0].abs() > 1e-12 * scale {
            left_exp[0] = e;
        }
        if right[n - 1].abs() > 1e-12 * scale {
            right_exp[n - 1] = e;
        }
        for k in phi.jump_nodes() {
            right_exp[k - 1] = e;
        }
        Ok(KStarImage {
            grid: self.grid.clone(),
            values,
            left_exp,
            right_exp,
        })
    }
}

/// `K*φ` on `phi`'s grid; see [`KStarOperator::apply`].
pub fn kstar_apply(hurst: Hurst, phi: &CellFunction) -> Result<KStarImage> {
    KStarOperator::new(hurst, phi.grid())?.apply(phi)
}
