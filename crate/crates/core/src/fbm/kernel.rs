//! The square-integrable kernel `K_H(t, s)` representing fBm with `H < 1/2`
//! over a standard Brownian motion, and its time derivative.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use crate::error::{domain, usage, Error, Result};
use crate::fbm::{rh, Hurst};
use crate::quad::{integrate, integrate_endpoint_singular, QuadOptions};
use crate::specfun::beta;

/// Maximum admissible residual of the covariance identity at the
/// calibration probes.
pub const DH_CALIBRATION_TOL: f64 = 1e-7;

const INNER_OPTS: QuadOptions = QuadOptions {
    abs_tol: 1e-14,
    rel_tol: 1e-13,
    max_intervals: 200,
};

/// Outcome of checking `d_H` against `R_H(t,s) = ∫ K_H(t,u) K_H(s,u) du`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DhCalibration {
    /// `(t, s, |∫K K - R_H|)` at each probe.
    pub residuals: [(f64, f64, f64); 2],
    pub tolerance: f64,
}

impl DhCalibration {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.2).fold(0.0, f64::max)
    }
}

/// `K_H` for a fixed `H < 1/2` with its normalizing constant.
#[derive(Debug, Clone)]
pub struct KernelKh {
    hurst: Hurst,
    d_h: f64,
    /// `∫_{1/2}^1 z^{-2H} (1-z)^{H-1/2} dz`.
    upper_half: f64,
    calibration: DhCalibration,
}

type CacheEntry = (f64, f64, DhCalibration);

fn cache() -> &'static Mutex<HashMap<u64, CacheEntry>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, CacheEntry>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

impl KernelKh {
    /// Build the kernel, computing `d_H = (2H / ((1-2H) B(1-2H, H+1/2)))^{1/2}`
    /// and verifying it against the covariance identity. Construction for a
    /// given `H` is memoized.
    pub fn new(hurst: Hurst) -> Result<Self> {
        let h = hurst.value();
        if h >= 0.5 {
            return usage(format!("K_H is only used for H < 1/2, got H={h}"));
        }
        let key = h.to_bits();
        if let Some(&(d_h, upper_half, calibration)) =
            cache().lock().expect("kernel cache poisoned").get(&key)
        {
            return Ok(Self {
                hurst,
                d_h,
                upper_half,
                calibration,
            });
        }
        let beta_full = beta(1.0 - 2.0 * h, h + 0.5)?;
        let d_h = (2.0 * h / ((1.0 - 2.0 * h) * beta_full)).sqrt();
        let upper_half = upper_tail(h, 0.5)?;
        let mut kernel = Self {
            hurst,
            d_h,
            upper_half,
            calibration: DhCalibration {
                residuals: [(0.0, 0.0, 0.0); 2],
                tolerance: DH_CALIBRATION_TOL,
            },
        };
        kernel.calibration = kernel.calibrate()?;
        if kernel.calibration.max_residual() > DH_CALIBRATION_TOL {
            return Err(Error::Numerical(format!(
                "d_H={d_h} fails the covariance identity at H={h}: residual {}",
                kernel.calibration.max_residual()
            )));
        }
        cache()
            .lock()
            .expect("kernel cache poisoned")
            .insert(key, (d_h, upper_half, kernel.calibration));
        Ok(kernel)
    }

    pub fn hurst(&self) -> Hurst {
        self.hurst
    }

    pub fn d_h(&self) -> f64 {
        self.d_h
    }

    pub fn calibration(&self) -> &DhCalibration {
        &self.calibration
    }

    /// `∫_x^1 z^{-2H} (1-z)^{H-1/2} dz` for `x ∈ (0, 1)`.
    fn tail_integral(&self, x: f64) -> Result<f64> {
        let h = self.hurst.value();
        if x >= 0.5 {
            upper_tail(h, x)
        } else {
            // w = z^{1-2H} absorbs the z^{-2H} singularity
            let q = 1.0 - 2.0 * h;
            let inv_q = 1.0 / q;
            let lo = x.powf(q);
            let hi = 0.5f64.powf(q);
            let piece = integrate(|w| (1.0 - w.powf(inv_q)).powf(h - 0.5), lo, hi, INNER_OPTS)?;
            Ok(self.upper_half + piece * inv_q)
        }
    }

    /// `K_H(t, s)` for `0 < s < t`.
    pub fn eval(&self, t: f64, s: f64) -> Result<f64> {
        if !(s > 0.0 && s < t) || !t.is_finite() {
            return domain(format!("K_H(t, s) requires 0 < s < t, got t={t}, s={s}"));
        }
        let h = self.hurst.value();
        let e = h - 0.5;
        let tail = self.tail_integral(s / t)?;
        Ok(self.d_h * ((t / s).powf(e) * (t - s).powf(e) - e * s.powf(e) * tail))
    }

    /// `∂K_H/∂t (t, s) = d_H (H - 1/2) (t/s)^{H-1/2} (t-s)^{H-3/2}`.
    pub fn dt(&self, t: f64, s: f64) -> Result<f64> {
        if !(s > 0.0 && s < t) || !t.is_finite() {
            return domain(format!("∂K_H/∂t requires 0 < s < t, got t={t}, s={s}"));
        }
        let e = self.hurst.value() - 0.5;
        Ok(self.d_h * e * (t / s).powf(e) * (t - s).powf(e - 1.0))
    }

    /// `∫_0^{min(t,s)} K_H(t,u) K_H(s,u) du` by singularity-adapted
    /// quadrature.
    pub fn gram(&self, t: f64, s: f64) -> Result<f64> {
        let (lo, hi) = if t <= s { (t, s) } else { (s, t) };
        let h = self.hurst.value();
        let e = h - 0.5;
        let f = |u: f64| match (self.eval(lo, u), self.eval(hi, u)) {
            (Ok(a), Ok(b)) => a * b,
            _ => f64::NAN,
        };
        let right_exp = if lo == hi { 2.0 * e } else { e };
        let opts = QuadOptions::with_tol(1e-12, 1e-10);
        integrate_endpoint_singular(f, 0.0, lo, 2.0 * e, right_exp, opts)
    }

    fn calibrate(&self) -> Result<DhCalibration> {
        let h = self.hurst.value();
        let mut residuals = [(0.0, 0.0, 0.0); 2];
        for (slot, (t, s)) in residuals.iter_mut().zip([(1.0, 1.0), (1.0, 0.5)]) {
            let got = self.gram(t, s)?;
            *slot = (t, s, (got - rh(h, t, s)).abs());
        }
        Ok(DhCalibration {
            residuals,
            tolerance: DH_CALIBRATION_TOL,
        })
    }
}

/// `∫_x^1 z^{-2H} (1-z)^{H-1/2} dz` for `x ≥ 1/2`, with `v = (1-z)^{H+1/2}`.
fn upper_tail(h: f64, x: f64) -> Result<f64> {
    let p = h + 0.5;
    let inv_p = 1.0 / p;
    let hi = (1.0 - x).powf(p);
    let v = integrate(
        |v| (1.0 - v.powf(inv_p)).powf(-2.0 * h),
        0.0,
        hi,
        INNER_OPTS,
    )?;
    Ok(v * inv_p)
}

/// `K_H(t, s)`; see [`KernelKh::eval`].
pub fn kernel_kh(h: Hurst, t: f64, s: f64) -> Result<f64> {
    KernelKh::new(h)?.eval(t, s)
}

/// `∂K_H/∂t (t, s)`; see [`KernelKh::dt`].
pub fn kernel_kh_dt(h: Hurst, t: f64, s: f64) -> Result<f64> {
    KernelKh::new(h)?.dt(t, s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k03() -> KernelKh {
        KernelKh::new(Hurst::new(0.3).unwrap()).unwrap()
    }

    #[test]
    fn d_h_closed_form_and_calibration() {
        let k = k03();
        // 40-digit evaluation of the closed form
        assert!((k.d_h() - 0.730_282_934_079_922_965_7).abs() < 1e-14);
        assert!(k.calibration().max_residual() < DH_CALIBRATION_TOL);
    }

    #[test]
    fn kernel_matches_high_precision_quadrature() {
        // references: 40-digit adaptive quadrature of the defining integral
        let k = k03();
        for (t, s, want) in [
            (0.8, 0.4, 0.912_858_087_922_951_516_9),
            (1.0, 0.1, 0.889_909_759_259_124_133_2),
            (0.5, 0.001, 1.756_530_561_612_512_777_4),
        ] {
            let got = k.eval(t, s).unwrap();
            assert!((got - want).abs() < 1e-11, "({t},{s}): {got} vs {want}");
        }
    }

    #[test]
    fn kernel_tends_to_indicator_near_half() {
        let k = KernelKh::new(Hurst::new(0.4999).unwrap()).unwrap();
        for (t, s) in [(1.0, 0.5), (0.7, 0.2), (0.3, 0.29)] {
            assert!((k.eval(t, s).unwrap() - 1.0).abs() < 5e-3);
        }
    }

    #[test]
    fn kernel_domain_errors() {
        let k = k03();
        assert!(k.eval(0.5, 0.5).is_err());
        assert!(k.eval(0.5, 0.0).is_err());
        assert!(k.eval(0.4, 0.6).is_err());
        assert!(k.dt(0.4, 0.6).is_err());
        assert!(KernelKh::new(Hurst::new(0.6).unwrap()).is_err());
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let k = k03();
        let d = k.dt(0.8, 0.4).unwrap();
        assert!(d < 0.0);
        // central difference of K with step 1e-6, computed at 40 digits
        let fd = -0.381_806_360_229_355_747_9;
        assert!(((d - fd) / fd).abs() < 1e-4);
        let step = 1e-6;
        let local =
            (k.eval(0.8 + step, 0.4).unwrap() - k.eval(0.8 - step, 0.4).unwrap()) / (2.0 * step);
        assert!(((d - local) / d).abs() < 1e-4);
    }

    #[test]
    fn kernel_bounds_hold_on_a_grid() {
        let k = k03();
        let e = -0.2;
        // constants fitted on this grid and frozen with headroom
        let (c_h, c_dh) = (1.0, 0.2);
        for i in 1..40 {
            for j in 0..i {
                let t = i as f64 / 40.0 + 0.01;
                let s = j as f64 / 40.0 + 0.005;
                let kv = k.eval(t, s).unwrap().abs();
                assert!(kv <= c_h * ((t - s).powf(e) + s.powf(e)), "K({t},{s})");
                let dv = k.dt(t, s).unwrap().abs();
                assert!(dv <= c_dh * (t - s).powf(e - 1.0), "dK({t},{s})");
            }
        }
    }

    #[test]
    fn gram_reproduces_covariance() {
        let k = k03();
        for (t, s) in [(0.75, 0.5), (0.25, 1.0), (0.6, 0.6)] {
            let got = k.gram(t, s).unwrap();
            assert!((got - rh(0.3, t, s)).abs() < 1e-7, "({t},{s}): {got}");
        }
    }
}
