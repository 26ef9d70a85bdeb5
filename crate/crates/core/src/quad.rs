//! One-dimensional quadrature: adaptive Gauss–Kronrod (7/15) and fixed
//! Gauss–Legendre rules.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-13,
            rel_tol: 1e-11,
            max_intervals: 2000,
        }
    }
}

impl QuadOptions {
    pub fn with_tol(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod integration of `f` over `[a, b]`.
///
/// The integrand is never evaluated at the endpoints, so integrable endpoint
/// singularities are tolerated (slowly); callers with known singular
/// behavior should transform it away first.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let mut segs: Vec<(f64, f64, f64, f64)> = Vec::with_capacity(64);
    let (v, e) = gk15(&f, a, b);
    segs.push((a, b, v, e));
    let mut total = v;
    let mut err = e;
    while err > opts.abs_tol.max(opts.rel_tol * total.abs()) {
        if segs.len() >= opts.max_intervals {
            return Err(Error::Numerical(format!(
                "adaptive quadrature on [{a}, {b}] did not converge: estimate {total}, error {err}"
            )));
        }
        let (idx, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, sv, se) = segs.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        total += v1 + v2 - sv;
        err += e1 + e2 - se;
        segs.push((lo, mid, v1, e1));
        segs.push((mid, hi, v2, e2));
        if !total.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite integrand on [{a}, {b}]"
            )));
        }
    }
    // re-sum to shed the drift of the running updates
    Ok(segs.iter().map(|s| s.2).sum())
}

/// Integrate `f` over `[a, b]` when `f(x) ~ (x - a)^{left_exp}` near `a`
/// and `f(x) ~ (b - x)^{right_exp}` near `b` (exponents `> -1`, zero for a
/// regular endpoint). Each half is mapped by `x - a = w^{1/(e+1)}` (resp.
/// `b - x`) so that the transformed integrand is bounded.
pub fn integrate_endpoint_singular<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    left_exp: f64,
    right_exp: f64,
    opts: QuadOptions,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let c = 0.5 * (a + b);
    let half = |e: f64, from_left: bool| -> Result<f64> {
        if e == 0.0 {
            return if from_left {
                integrate(&f, a, c, opts)
            } else {
                integrate(&f, c, b, opts)
            };
        }
        let p = 1.0 / (e + 1.0);
        let upper = (c - a).powf(e + 1.0);
        let g = |w: f64| {
            let d = w.powf(p);
            let x = if from_left { a + d } else { b - d };
            if d <= 0.0 {
                return 0.0;
            }
            p * f(x) * d.powf(-e)
        };
        integrate(g, 0.0, upper, opts)
    };
    Ok(half(left_exp, true)? + half(right_exp, false)?)
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = nf * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Apply a Gauss–Legendre rule (from [`gauss_legendre`]) on `[a, b]`.
pub fn apply_rule<F: Fn(f64) -> f64>(rule: &(Vec<f64>, Vec<f64>), f: F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    rule.0
        .iter()
        .zip(&rule.1)
        .map(|(x, w)| w * f(c + h * x))
        .sum::<f64>()
        * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x| x * x * x - 2.0 * x, 0.0, 2.0, QuadOptions::default()).unwrap();
        assert!((v - 0.0).abs() < 1e-13);
        let v = integrate(|x| x.powi(6), -1.0, 1.0, QuadOptions::default()).unwrap();
        assert!((v - 2.0 / 7.0).abs() < 1e-14);
    }

    #[test]
    fn endpoint_singularity_converges() {
        let v = integrate(
            |x| x.powf(-0.5),
            0.0,
            1.0,
            QuadOptions::with_tol(1e-10, 1e-10),
        )
        .unwrap();
        assert!((v - 2.0).abs() < 1e-8);
    }

    #[test]
    fn endpoint_singular_transform() {
        // ∫_0^1 x^{-0.4} (1-x)^{-0.3} dx = B(0.6, 0.7)
        let want = crate::specfun::beta(0.6, 0.7).unwrap();
        let v = integrate_endpoint_singular(
            |x| x.powf(-0.4) * (1.0 - x).powf(-0.3),
            0.0,
            1.0,
            -0.4,
            -0.3,
            QuadOptions::default(),
        )
        .unwrap();
        assert!((v - want).abs() < 1e-11 * want);
    }

    #[test]
    fn gauss_legendre_integrates_degree_2n_minus_1() {
        for n in [1, 2, 5, 8, 16] {
            let rule = gauss_legendre(n);
            let deg = 2 * n - 1;
            let v = apply_rule(&rule, |x| x.powi(deg as i32 - 1), 0.0, 1.0);
            assert!((v - 1.0 / deg as f64).abs() < 1e-14, "n={n}");
            assert!((rule.1.iter().sum::<f64>() - 2.0).abs() < 1e-13);
        }
    }
}
