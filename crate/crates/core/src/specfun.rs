//! Special functions: log-Gamma, Beta, probabilists' Hermite polynomials and
//! Gamma ratios evaluated in log space.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, usage, Result};

const LANCZOS_G: f64 = 607.0 / 128.0;

const LANCZOS_COEFFS: [f64; 15] = [
    0.999_999_999_999_997_1,
    57.156_235_665_862_92,
    -59.597_960_355_475_49,
    14.136_097_974_741_747,
    -0.491_913_816_097_620_2,
    0.339_946_499_848_118_9e-4,
    0.465_236_289_270_485_8e-4,
    -0.983_744_753_048_795_6e-4,
    0.158_088_703_224_912_5e-3,
    -0.210_264_441_724_104_9e-3,
    0.217_439_618_115_212_6e-3,
    -0.164_318_106_536_763_9e-3,
    0.844_182_239_838_527_4e-4,
    -0.261_908_384_015_814_1e-4,
    0.368_991_826_595_316_2e-5,
];

/// Above this argument the Stirling series is used instead of Lanczos.
const STIRLING_CUTOFF: f64 = 10.0;

const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;

/// Largest supported Hermite order.
pub const MAX_HERMITE_ORDER: u32 = 12;

/// Tail of the Stirling series for `ln Γ(x) - [(x - ½) ln x - x + ½ ln 2π]`.
fn stirling_tail(x: f64) -> f64 {
    let r = 1.0 / x;
    let r2 = r * r;
    r * (1.0 / 12.0
        + r2 * (-1.0 / 360.0
            + r2 * (1.0 / 1260.0
                + r2 * (-1.0 / 1680.0
                    + r2 * (1.0 / 1188.0 + r2 * (-691.0 / 360_360.0 + r2 / 156.0))))))
}

fn ln_gamma_lanczos(x: f64) -> f64 {
    let mut acc = LANCZOS_COEFFS[0];
    for (k, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (x - 1.0 + k as f64);
    }
    let t = x + LANCZOS_G - 0.5;
    HALF_LN_TWO_PI + (x - 0.5) * t.ln() - t + acc.ln()
}

/// Natural logarithm of the Gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return domain(format!(
            "ln_gamma requires a finite positive argument, got {x}"
        ));
    }
    Ok(ln_gamma_unchecked(x))
}

pub(crate) fn ln_gamma_unchecked(x: f64) -> f64 {
    if x >= STIRLING_CUTOFF {
        (x - 0.5) * x.ln() - x + HALF_LN_TWO_PI + stirling_tail(x)
    } else if x < 0.5 {
        // reflection keeps the Lanczos sum in its accurate range
        (PI / (PI * x).sin()).ln() - ln_gamma_lanczos(1.0 - x)
    } else {
        ln_gamma_lanczos(x)
    }
}

/// `ln Γ(x + a) - ln Γ(x + b)` without the cancellation of two large
/// log-Gammas when `x` is large.
pub fn ln_gamma_ratio(x: f64, a: f64, b: f64) -> Result<f64> {
    let (xa, xb) = (x + a, x + b);
    if !(xa > 0.0) || !(xb > 0.0) {
        return domain(format!(
            "ln_gamma_ratio requires x + a > 0 and x + b > 0, got x={x}, a={a}, b={b}"
        ));
    }
    if a == b {
        return Ok(0.0);
    }
    if xa >= STIRLING_CUTOFF && xb >= STIRLING_CUTOFF && x > 0.0 {
        // (x+a-½)ln(x+a) - (x+b-½)ln(x+b) - (a-b), expanded around ln x
        let lead = (a - b) * x.ln() + (xa - 0.5) * (a / x).ln_1p() - (xb - 0.5) * (b / x).ln_1p();
        Ok(lead - (a - b) + stirling_tail(xa) - stirling_tail(xb))
    } else {
        Ok(ln_gamma_unchecked(xa) - ln_gamma_unchecked(xb))
    }
}

pub fn gamma(x: f64) -> Result<f64> {
    ln_gamma(x).map(f64::exp)
}

pub fn ln_beta(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0) || !(b > 0.0) {
        return domain(format!("beta requires positive arguments, got ({a}, {b})"));
    }
    Ok(ln_gamma_unchecked(a) + ln_gamma_unchecked(b) - ln_gamma_unchecked(a + b))
}

/// Beta function `B(a, b) = Γ(a)Γ(b)/Γ(a+b)`, assembled in log space.
pub fn beta(a: f64, b: f64) -> Result<f64> {
    ln_beta(a, b).map(f64::exp)
}

/// Order of a probabilists' Hermite polynomial, capped at
/// [`MAX_HERMITE_ORDER`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct HermiteOrder(u32);

impl HermiteOrder {
    pub fn new(m: u32) -> Result<Self> {
        if m > MAX_HERMITE_ORDER {
            return usage(format!(
                "Hermite order {m} unsupported (maximum {MAX_HERMITE_ORDER})"
            ));
        }
        Ok(Self(m))
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

impl TryFrom<u32> for HermiteOrder {
    type Error = crate::Error;

    fn try_from(m: u32) -> Result<Self> {
        Self::new(m)
    }
}

impl From<HermiteOrder> for u32 {
    fn from(m: HermiteOrder) -> u32 {
        m.0
    }
}

/// Probabilists' Hermite polynomial `He_m(x)` by the three-term recurrence
/// `He_{k+1} = x He_k - k He_{k-1}`.
pub fn hermite(m: HermiteOrder, x: f64) -> f64 {
    let m = m.get();
    if m == 0 {
        return 1.0;
    }
    let (mut prev, mut cur) = (1.0, x);
    for k in 1..m {
        let next = x * cur - k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `Γ(n+a) n^{b-a} / Γ(n+b)`; tends to 1 as `n → ∞` for fixed `a`, `b`.
pub fn stirling_ratio(n: f64, a: f64, b: f64) -> Result<f64> {
    if !(n > 0.0) {
        return domain(format!("stirling_ratio requires n > 0, got {n}"));
    }
    let lr = ln_gamma_ratio(n, a, b)?;
    Ok((lr + (b - a) * n.ln()).exp())
}

/// `m!` as a float (exact for the orders used here).
pub fn factorial(m: u32) -> f64 {
    (1..=m).map(f64::from).product()
}

/// `E[Z^k]` for a standard normal `Z`.
pub fn normal_moment(k: u32) -> f64 {
    if k % 2 == 1 {
        0.0
    } else {
        (1..k).step_by(2).map(f64::from).product()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    // reference values: 40-digit evaluations of ln Γ
    const LN_GAMMA_REF: [(f64, f64); 12] = [
        (0.001, 6.907_178_885_383_853_682_5),
        (0.1, 2.252_712_651_734_205_959_9),
        (0.5, 0.572_364_942_924_700_087_07),
        (0.75, 0.203_280_951_431_295_371_48),
        (1.5, -0.120_782_237_635_245_222_35),
        (2.5, 0.284_682_870_472_919_159_63),
        (3.7, 1.428_072_326_665_387_921_9),
        (7.25, 7.052_185_450_738_539_444_9),
        (12.5, 18.734_347_511_936_445_702),
        (100.3, 360.514_705_729_058_131_24),
        (12345.678, 103_959.919_905_546_060_92),
        (1e8, 1_742_068_066.103_834_709_3),
    ];

    #[test]
    fn ln_gamma_matches_reference() {
        for (x, want) in LN_GAMMA_REF {
            let got = ln_gamma(x).unwrap();
            assert!(rel(got, want) < 1e-13, "x={x}: got {got}, want {want}");
        }
    }

    #[test]
    fn ln_gamma_trivial_values() {
        assert!(ln_gamma(1.0).unwrap().abs() < 1e-15);
        assert!(ln_gamma(2.0).unwrap().abs() < 1e-15);
        assert!(rel(ln_gamma(5.0).unwrap(), 24f64.ln()) < 1e-14);
        assert!(rel(ln_gamma(0.5).unwrap(), 0.5 * PI.ln()) < 1e-14);
    }

    #[test]
    fn ln_gamma_rejects_nonpositive() {
        assert!(matches!(ln_gamma(0.0), Err(crate::Error::Domain(_))));
        assert!(matches!(ln_gamma(-2.5), Err(crate::Error::Domain(_))));
        assert!(ln_gamma(f64::NAN).is_err());
    }

    #[test]
    fn ln_gamma_continuous_across_branches() {
        for x in [0.5, STIRLING_CUTOFF] {
            let lo = ln_gamma(x - 1e-12).unwrap();
            let hi = ln_gamma(x + 1e-12).unwrap();
            assert!((lo - hi).abs() < 1e-10);
        }
    }

    #[test]
    fn beta_values() {
        assert!((beta(1.0, 1.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((beta(2.0, 1.0).unwrap() - 0.5).abs() < 1e-14);
        // quadrature of z^0.5 (1-z)^-0.5 on [0,1]
        assert!(rel(beta(1.5, 0.5).unwrap(), std::f64::consts::FRAC_PI_2) < 1e-13);
        assert!(beta(0.0, 1.0).is_err());
        assert!(beta(1.0, -1.0).is_err());
    }

    #[test]
    fn beta_gamma_bridge() {
        let grid = [0.3, 1.0, 2.5, 7.0];
        for a in grid {
            for b in grid {
                let lhs = ln_beta(a, b).unwrap();
                let rhs = ln_gamma(a).unwrap() + ln_gamma(b).unwrap() - ln_gamma(a + b).unwrap();
                assert!((lhs - rhs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hermite_examples() {
        let h = |m, x| hermite(HermiteOrder::new(m).unwrap(), x);
        assert_eq!(h(2, 2.0), 3.0);
        assert_eq!(h(0, 7.3), 1.0);
        assert_eq!(h(3, 1.0), -2.0);
        assert!(HermiteOrder::new(13).is_err());
    }

    #[test]
    fn hermite_recurrence_exact_at_integers() {
        for m in 1..=11u32 {
            for xi in -5..=5 {
                let x = xi as f64;
                let next = hermite(HermiteOrder::new(m + 1).unwrap(), x);
                let cur = hermite(HermiteOrder::new(m).unwrap(), x);
                let prev = hermite(HermiteOrder::new(m - 1).unwrap(), x);
                assert_eq!(next, x * cur - m as f64 * prev);
            }
        }
    }

    #[test]
    fn stirling_ratio_examples() {
        assert_eq!(stirling_ratio(37.0, 0.7, 0.7).unwrap(), 1.0);
        let n = 1e6;
        assert!(rel(stirling_ratio(n, 1.0, 2.0).unwrap(), n / (n + 1.0)) < 1e-13);
        // 40-digit reference for n=100, a=0.5, b=1.5
        let v = stirling_ratio(100.0, 0.5, 1.5).unwrap();
        assert!(rel(v, 0.995_024_875_621_890_547_3) < 1e-13);
        assert!((v - 1.0).abs() < 1e-2);
    }

    #[test]
    fn stirling_ratio_converges_monotonically() {
        let errs: Vec<f64> = [10.0, 1e2, 1e3, 1e4]
            .iter()
            .map(|&n| (stirling_ratio(n, 0.3, 2.2).unwrap() - 1.0).abs())
            .collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    }

    #[test]
    fn ln_gamma_ratio_matches_direct_difference() {
        for (x, a, b) in [(12.0, 0.25, 1.75), (50.0, -0.4, 0.6), (3.0, 0.5, 2.0)] {
            let direct = ln_gamma(x + a).unwrap() - ln_gamma(x + b).unwrap();
            assert!((ln_gamma_ratio(x, a, b).unwrap() - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn normal_moments() {
        assert_eq!(normal_moment(0), 1.0);
        assert_eq!(normal_moment(2), 1.0);
        assert_eq!(normal_moment(4), 3.0);
        assert_eq!(normal_moment(6), 15.0);
        assert_eq!(normal_moment(5), 0.0);
    }
}
