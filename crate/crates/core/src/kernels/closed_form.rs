//! Closed Gamma-function forms for monomial kernels.

use crate::error::{domain, Result};
use crate::fbm::Hurst;
use crate::quad::{integrate_endpoint_singular, QuadOptions};
use crate::specfun::{gamma, ln_beta, ln_gamma_ratio};

/// `∫_0^1∫_0^1 t^n s^m |t-s|^r ds dt
///   = [B(m+1, r+1) + B(n+1, r+1)] / (n+m+r+2)`.
pub fn closed_form_double_integral(n: u32, m: u32, r: f64) -> Result<f64> {
    if !(r > -1.0) || !r.is_finite() {
        return domain(format!("the double integral needs r > -1, got r={r}"));
    }
    let (nf, mf) = (f64::from(n), f64::from(m));
    let bm = ln_beta(mf + 1.0, r + 1.0)?.exp();
    let bn = ln_beta(nf + 1.0, r + 1.0)?.exp();
    Ok((bm + bn) / (nf + mf + r + 2.0))
}

/// The same double integral by adaptive quadrature, split along the diagonal
/// with the `|t-s|^r` singularity mapped away on both sides.
pub fn double_integral_quadrature(n: u32, m: u32, r: f64) -> Result<f64> {
    if !(r > -1.0) || !r.is_finite() {
        return domain(format!("the double integral needs r > -1, got r={r}"));
    }
    let opts = QuadOptions::with_tol(1e-15, 1e-12);
    let (ni, mi) = (n as i32, m as i32);
    let e = r.min(0.0);
    let inner = |t: f64| -> Result<f64> {
        // in the distance u = |t - s|, so that u is never formed by cancellation
        let below = |u: f64| (t - u).powi(mi) * u.powf(r);
        let above = |u: f64| (t + u).powi(mi) * u.powf(r);
        Ok(integrate_endpoint_singular(below, 0.0, t, r, 0.0, opts)?
            + integrate_endpoint_singular(above, 0.0, 1.0 - t, r, 0.0, opts)?)
    };
    // the inner integral behaves like t^{r+1} and (1-t)^{r+1} at the ends
    let failed = std::cell::Cell::new(None);
    let v = integrate_endpoint_singular(
        |t| match inner(t) {
            Ok(g) => t.powi(ni) * g,
            Err(err) => {
                failed.set(Some(err));
                0.0
            }
        },
        0.0,
        1.0,
        e,
        e,
        opts,
    )?;
    match failed.take() {
        Some(err) => Err(err),
        None => Ok(v),
    }
}

/// `n^{2H+1} Γ(n) Γ(2H+1) / Γ(n+2H+1)`, which tends to `Γ(2H+1)`.
fn gamma_block(n: f64, h: f64) -> Result<f64> {
    // Γ(n)/Γ(n+2H+1) = exp(ln_gamma_ratio(n, 0, 2H+1))
    let lr = ln_gamma_ratio(n, 0.0, 2.0 * h + 1.0)?;
    Ok(((2.0 * h + 1.0) * n.ln() + lr).exp() * gamma(2.0 * h + 1.0)?)
}

/// The three terms of `n^{2H}‖tⁿ‖²_𝔥 = A₁ - A₂ + A₃`, with
/// `A₁ = n^{2H}` from `K_H(1,·)²`, `A₂` the (positive) cross term and `A₃` the
/// squared tail term.
pub fn monomial_h_norm_terms(n: u32, h: Hurst) -> Result<[f64; 3]> {
    if n == 0 {
        return domain("monomial norms need n ≥ 1");
    }
    let (nf, hv) = (f64::from(n), h.value());
    let n2h = nf.powf(2.0 * hv);
    let g = gamma_block(nf, hv)?;
    let a1 = n2h;
    let a2 = n2h + nf * n2h / (nf + 2.0 * hv) - g;
    let a3 = nf * n2h / (nf + 2.0 * hv) - g * nf / (2.0 * nf + 2.0 * hv);
    Ok([a1, a2, a3])
}

/// `n^{2H}‖tⁿ‖²_𝔥 = G_n (n+2H)/(2(n+H))` with
/// `G_n = n^{2H+1}Γ(n)Γ(2H+1)/Γ(n+2H+1)`; the limit is `HΓ(2H)`.
pub fn monomial_h_norm(n: u32, h: Hurst) -> Result<f64> {
    if n == 0 {
        return domain("monomial norms need n ≥ 1");
    }
    let (nf, hv) = (f64::from(n), h.value());
    Ok(gamma_block(nf, hv)? * (nf + 2.0 * hv) / (2.0 * (nf + hv)))
}

/// `HΓ(2H)`.
pub fn monomial_limit(h: Hurst) -> f64 {
    let hv = h.value();
    hv * gamma(2.0 * hv).expect("2H > 0")
}
