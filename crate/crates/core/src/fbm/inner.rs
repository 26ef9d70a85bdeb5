//! Inner products of the fBm Hilbert space `𝔥` by three numerical routes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};
use crate::fbm::{fgn_autocovariance, rh, Hurst, KStarOperator};
use crate::grid::CellFunction;
use crate::quad::{apply_rule, gauss_legendre};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InnerMethod {
    /// `α_H ∫∫ φ(s)ψ(t)|t-s|^{2H-2} ds dt`, for `H > 1/2`.
    WeightedDoubleIntegral,
    /// `⟨K*φ, K*ψ⟩_{L²}`, for `H < 1/2`.
    KStar,
    /// `Σ_ij φ̄_i ψ̄_j E[ΔB_i ΔB_j]` with cell averages, any `H`.
    IncrementBilinear,
}

/// `⟨φ, ψ⟩_𝔥` for two functions on the same grid.
pub fn inner_product_h(
    h: Hurst,
    phi: &CellFunction,
    psi: &CellFunction,
    method: InnerMethod,
) -> Result<f64> {
    if phi.grid() != psi.grid() {
        return usage("inner product of functions on different grids");
    }
    match method {
        InnerMethod::WeightedDoubleIntegral => {
            if h.value() <= 0.5 {
                return usage(format!(
                    "the weighted double integral needs H > 1/2, got H={h}"
                ));
            }
            weighted_double_integral(h, phi, psi)
        }
        InnerMethod::KStar => {
            if h.value() >= 0.5 {
                return usage(format!("the K* route needs H < 1/2, got H={h}"));
            }
            let op = KStarOperator::new(h, phi.grid())?;
            op.apply(phi)?.l2_inner(&op.apply(psi)?)
        }
        InnerMethod::IncrementBilinear => Ok(increment_bilinear(h, phi, psi)),
    }
}

fn increment_bilinear(h: Hurst, phi: &CellFunction, psi: &CellFunction) -> f64 {
    let a = phi.cell_means();
    let b = psi.cell_means();
    let grid = phi.grid();
    let n = a.len();
    let rows: Vec<f64> = if let Some(step) = grid.step() {
        let scale = step.powf(2.0 * h.value());
        let gamma: Vec<f64> = (0..n).map(|k| scale * fgn_autocovariance(h, k)).collect();
        (0..n)
            .into_par_iter()
            .map(|i| a[i] * (0..n).map(|j| gamma[i.abs_diff(j)] * b[j]).sum::<f64>())
            .collect()
    } else {
        let t = grid.times();
        let hv = h.value();
        (0..n)
            .into_par_iter()
            .map(|i| {
                a[i] * (0..n)
                    .map(|j| {
                        let m = rh(hv, t[i + 1], t[j + 1])
                            - rh(hv, t[i + 1], t[j])
                            - rh(hv, t[i], t[j + 1])
                            + rh(hv, t[i], t[j]);
                        m * b[j]
                    })
                    .sum::<f64>()
            })
            .collect()
    };
    rows.iter().sum()
}

/// Coefficients in `z` (ascending) of `∫ x^p y^q` along `y - x = z` in the
/// unit square, for `(p, q)` in `00, 10, 01, 11`, on `z ≥ 0` and `z < 0`.
const POS_LINE: [[f64; 4]; 4] = [
    [1.0, -1.0, 0.0, 0.0],
    [0.5, -1.0, 0.5, 0.0],
    [0.5, 0.0, -0.5, 0.0],
    [1.0 / 3.0, -0.5, 0.0, 1.0 / 6.0],
];
const NEG_LINE: [[f64; 4]; 4] = [
    [1.0, 1.0, 0.0, 0.0],
    [0.5, 0.0, -0.5, 0.0],
    [0.5, 1.0, 0.5, 0.0],
    [1.0 / 3.0, 0.5, 0.0, -1.0 / 6.0],
];

fn poly_eval(c: &[f64; 4], z: f64) -> f64 {
    c[0] + z * (c[1] + z * (c[2] + z * c[3]))
}

/// `∫_{z0}^{z1} P(z) |d + z|^r dz` exactly, by expanding `P` around `u = d + z`.
fn exact_piece(c: &[f64; 4], d: f64, r: f64, z0: f64, z1: f64) -> f64 {
    // P(u - d) = Σ_k q_k u^k
    let mut q = [0.0; 4];
    let binom = [
        [1.0, 0.0, 0.0, 0.0],
        [1.0, 1.0, 0.0, 0.0],
        [1.0, 2.0, 1.0, 0.0],
        [1.0, 3.0, 3.0, 1.0],
    ];
    for (j, cj) in c.iter().enumerate() {
        for k in 0..=j {
            q[k] += cj * binom[j][k] * (-d).powi((j - k) as i32);
        }
    }
    // ∫ u^k |u|^r over [lo, hi] on one side of 0
    let side = |lo: f64, hi: f64| -> f64 {
        q.iter()
            .enumerate()
            .map(|(k, qk)| {
                let e = k as f64 + r + 1.0;
                if lo >= 0.0 {
                    qk * (hi.powf(e) - lo.powf(e)) / e
                } else {
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    qk * sign * ((-lo).powf(e) - (-hi).powf(e)) / e
                }
            })
            .sum()
    };
    let (u0, u1) = (d + z0, d + z1);
    if u0 >= 0.0 || u1 <= 0.0 {
        side(u0, u1)
    } else {
        side(u0, 0.0) + side(0.0, u1)
    }
}

/// `E_ab(d) = ∫∫ B_a(x) B_b(y) |d + y - x|^r dx dy` with `B_0 = 1 - x`, `B_1 = x`.
fn basis_moments(d: i64, r: f64, rule: &(Vec<f64>, Vec<f64>)) -> [[f64; 2]; 2] {
    let df = d as f64;
    let mut m = [0.0; 4];
    for (k, mk) in m.iter_mut().enumerate() {
        *mk = if d.abs() <= 2 {
            exact_piece(&NEG_LINE[k], df, r, -1.0, 0.0) + exact_piece(&POS_LINE[k], df, r, 0.0, 1.0)
        } else {
            apply_rule(
                rule,
                |z| poly_eval(&NEG_LINE[k], z) * (df + z).abs().powf(r),
                -1.0,
                0.0,
            ) + apply_rule(
                rule,
                |z| poly_eval(&POS_LINE[k], z) * (df + z).abs().powf(r),
                0.0,
                1.0,
            )
        };
    }
    let [m00, m10, m01, m11] = m;
    [[m00 - m10 - m01 + m11, m01 - m11], [m10 - m11, m11]]
}

fn weighted_double_integral(h: Hurst, phi: &CellFunction, psi: &CellFunction) -> Result<f64> {
    let grid = phi.grid();
    let Some(step) = grid.step() else {
        return usage("the weighted double integral is implemented for uniform grids only");
    };
    let n = grid.n_intervals() as i64;
    let r = 2.0 * h.value() - 2.0;
    let rule = gauss_legendre(16);
    let table: Vec<[[f64; 2]; 2]> = (-(n - 1)..n).map(|d| basis_moments(d, r, &rule)).collect();
    let (pl, pr, ql, qr) = (phi.left(), phi.right(), psi.left(), psi.right());
    let rows: Vec<f64> = (0..n as usize)
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for j in 0..n as usize {
                let e = &table[(j as i64 - i as i64 + n - 1) as usize];
                acc += pl[i] * (e[0][0] * ql[j] + e[0][1] * qr[j])
                    + pr[i] * (e[1][0] * ql[j] + e[1][1] * qr[j]);
            }
            acc
        })
        .collect();
    Ok(h.alpha() * step.powf(2.0 + r) * rows.iter().sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    #[test]
    fn basis_moments_match_quadrature() {
        use crate::quad::{integrate_endpoint_singular, QuadOptions};
        let r = -0.5;
        let rule = gauss_legendre(16);
        for d in [-3i64, -1, 0, 1, 2, 5] {
            let e = basis_moments(d, r, &rule);
            // sum of all four = ∫_{-1}^{1} (1 - |z|) |d+z|^r dz
            let f = |z: f64| (1.0 - z.abs()) * (d as f64 + z).abs().powf(r);
            let want = if d.abs() <= 1 {
                let c = -(d as f64);
                let left = if c > -1.0 {
                    integrate_endpoint_singular(f, -1.0, c, 0.0, r, QuadOptions::default()).unwrap()
                } else {
                    0.0
                };
                let right = if c < 1.0 {
                    integrate_endpoint_singular(f, c, 1.0, r, 0.0, QuadOptions::default()).unwrap()
                } else {
                    0.0
                };
                left + right
            } else {
                crate::quad::integrate(f, -1.0, 1.0, QuadOptions::default()).unwrap()
            };
            let got = e[0][0] + e[0][1] + e[1][0] + e[1][1];
            assert!((got - want).abs() < 1e-10, "d={d}: {got} vs {want}");
        }
    }

    #[test]
    fn indicators_reproduce_covariance_exactly() {
        let h = Hurst::new(0.75).unwrap();
        let g = GridSpec::uniform(64).unwrap();
        for (t, s) in [(0.25, 0.5), (1.0, 1.0), (0.75, 0.125)] {
            let a = CellFunction::indicator(&g, t);
            let b = CellFunction::indicator(&g, s);
            let want = rh(0.75, t, s);
            for m in [
                InnerMethod::WeightedDoubleIntegral,
                InnerMethod::IncrementBilinear,
            ] {
                let got = inner_product_h(h, &a, &b, m).unwrap();
                assert!(
                    (got - want).abs() < 1e-12,
                    "{m:?} ({t},{s}): {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn brownian_inner_product_is_l2() {
        let g = GridSpec::uniform(256).unwrap();
        let a = CellFunction::from_fn(&g, |t| t);
        let b = CellFunction::from_fn(&g, |t| 1.0 - t * t);
        let got = inner_product_h(Hurst::half(), &a, &b, InnerMethod::IncrementBilinear).unwrap();
        assert!((got - 0.25).abs() < 1e-5);
    }

    #[test]
    fn method_regime_mismatch_is_a_usage_error() {
        let g = GridSpec::uniform(8).unwrap();
        let a = CellFunction::from_fn(&g, |t| t);
        let lo = Hurst::new(0.3).unwrap();
        let hi = Hurst::new(0.7).unwrap();
        assert!(inner_product_h(lo, &a, &a, InnerMethod::WeightedDoubleIntegral).is_err());
        assert!(inner_product_h(hi, &a, &a, InnerMethod::KStar).is_err());
        assert!(inner_product_h(Hurst::half(), &a, &a, InnerMethod::KStar).is_err());
        let nonuni = GridSpec::from_times(vec![0.0, 0.2, 0.7, 1.0]).unwrap();
        let b = CellFunction::from_fn(&nonuni, |t| t);
        assert!(inner_product_h(hi, &b, &b, InnerMethod::WeightedDoubleIntegral).is_err());
    }
}
