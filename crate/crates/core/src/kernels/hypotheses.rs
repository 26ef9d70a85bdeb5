//! Finite-`n` evidence for the asymptotic conditions (h1)–(h8) on a kernel
//! sequence, with verdicts drawn from a geometric probe ladder.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};
use crate::fbm::{inner_product_h, Hurst, InnerMethod, KStarOperator};
use crate::grid::{CellFunction, GridSpec};
use crate::kernels::closed_form::{closed_form_double_integral, monomial_h_norm};
use crate::kernels::KernelSequence;
use crate::quad::{
    apply_rule, gauss_legendre, integrate, integrate_endpoint_singular, QuadOptions,
};
use crate::specfun::ln_beta;

/// Log-log slope separating "decays"/"grows" from "flat".
const SLOPE_TOL: f64 = 0.05;
/// Relative change below which consecutive probes count as equal.
const FLAT_TOL: f64 = 1e-9;
/// An extrapolated limit below this fraction of the largest probe is zero.
const LIMIT_FLOOR: f64 = 1e-3;
/// Relative agreement required with a claimed limit.
const CLAIM_TOL: f64 = 2e-2;
/// Number of trailing probes the trend rules look at.
const TAIL: usize = 3;

/// `n ∈ {2⁴, …, 2¹²}`.
pub fn default_ladder() -> Vec<u32> {
    (4..=12).map(|k| 1u32 << k).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Supports,
    Fails,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub n: u32,
    pub value: f64,
    /// Secondary diagnostic (the full-interval integral for h1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aux: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub hypothesis: String,
    pub family: String,
    #[serde(rename = "H")]
    pub hurst: Option<f64>,
    pub probes: Vec<Probe>,
    pub verdict: Verdict,
    pub extrapolated_limit: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Variant of the sup-type conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SupVariant {
    H2,
    H3,
    /// `(sup_{[0,δ]} φ_n)(sup_{[0,1]} φ_n)^{m-1}`.
    H3m(u32),
}

fn check_ladder(ns: &[u32]) -> Result<()> {
    if ns.len() < TAIL {
        return usage(format!("a probe ladder needs at least {TAIL} values of n"));
    }
    if ns[0] == 0 || ns.windows(2).any(|w| w[1] <= w[0]) {
        return usage("probe n must be positive and strictly increasing");
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Trend {
    Up,
    Down,
    Flat,
    Mixed,
}

fn trend(v: &[f64]) -> Trend {
    let steps: Vec<i8> = v
        .windows(2)
        .map(|w| {
            let scale = w[0].abs().max(w[1].abs());
            if (w[1] - w[0]).abs() <= FLAT_TOL * scale {
                0
            } else if w[1] > w[0] {
                1
            } else {
                -1
            }
        })
        .collect();
    if steps.iter().all(|&s| s == 0) {
        Trend::Flat
    } else if steps.iter().all(|&s| s >= 0) {
        Trend::Up
    } else if steps.iter().all(|&s| s <= 0) {
        Trend::Down
    } else {
        Trend::Mixed
    }
}

/// Least-squares slope of `ln v` against `ln n` (positive values only).
fn loglog_slope(ns: &[u32], v: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = ns
        .iter()
        .zip(v)
        .filter(|(_, &y)| y > 0.0)
        .map(|(&n, &y)| (f64::from(n).ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// Aitken/Richardson extrapolation from the last three probes, assuming
/// `v(n) ≈ L + c n^{-q}` on a geometric ladder.
pub fn richardson_limit(v: &[f64]) -> Option<f64> {
    if v.len() < 3 {
        return None;
    }
    let k = v.len();
    let (v0, v1, v2) = (v[k - 3], v[k - 2], v[k - 1]);
    let (d1, d2) = (v1 - v0, v2 - v1);
    if d2 == 0.0 {
        return Some(v2);
    }
    if d1 == 0.0 || d1.signum() != d2.signum() || d2.abs() >= d1.abs() {
        return None;
    }
    Some(v2 + d2 * d2 / (d1 - d2))
}

struct Outcome {
    verdict: Verdict,
    limit: Option<f64>,
}

fn converges_to_positive(
    ns: &[u32],
    values: &[f64],
    claimed: Option<f64>,
    notes: &mut Vec<String>,
) -> Outcome {
    if values.iter().any(|v| !v.is_finite()) {
        notes.push("non-finite probe value".into());
        return Outcome {
            verdict: Verdict::Fails,
            limit: None,
        };
    }
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let (tn, tv) = (&ns[ns.len() - TAIL..], &values[values.len() - TAIL..]);
    // a power-law tail heads to 0 or to infinity, whatever Richardson says
    match (trend(tv), loglog_slope(tn, tv)) {
        (Trend::Down, Some(s)) if s < -SLOPE_TOL => {
            notes.push(format!("probe values decay like n^{s:.3}"));
            return Outcome {
                verdict: Verdict::Fails,
                limit: Some(0.0),
            };
        }
        (Trend::Up, Some(s)) if s > SLOPE_TOL => {
            notes.push(format!("probe values grow like n^{s:.3}"));
            return Outcome {
                verdict: Verdict::Fails,
                limit: None,
            };
        }
        (_, None) => {
            notes.push("probe values are not positive".into());
            return Outcome {
                verdict: Verdict::Fails,
                limit: Some(0.0),
            };
        }
        _ => {}
    }
    let Some(limit) = richardson_limit(values) else {
        notes.push("probe differences do not contract; no extrapolation".into());
        return Outcome {
            verdict: Verdict::Inconclusive,
            limit: None,
        };
    };
    if limit <= LIMIT_FLOOR * scale {
        notes.push(format!(
            "extrapolated limit {limit:e} is indistinguishable from 0"
        ));
        return Outcome {
            verdict: Verdict::Fails,
            limit: Some(limit),
        };
    }
    if let Some(c) = claimed {
        if ((limit - c) / c).abs() > CLAIM_TOL {
            notes.push(format!(
                "extrapolated limit {limit} differs from the claimed L={c}"
            ));
            return Outcome {
                verdict: Verdict::Fails,
                limit: Some(limit),
            };
        }
    }
    Outcome {
        verdict: Verdict::Supports,
        limit: Some(limit),
    }
}

fn decays(ns: &[u32], values: &[f64], notes: &mut Vec<String>) -> Outcome {
    if values.iter().any(|v| !v.is_finite()) {
        notes.push("non-finite probe value".into());
        return Outcome {
            verdict: Verdict::Fails,
            limit: None,
        };
    }
    let k = values.len();
    let last = values[k - 1];
    let max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if last == 0.0 && max > 0.0 {
        return Outcome {
            verdict: Verdict::Supports,
            limit: Some(0.0),
        };
    }
    let (tn, tv) = (&ns[k - TAIL..], &values[k - TAIL..]);
    let slope = loglog_slope(tn, tv).unwrap_or(0.0);
    let t = trend(tv);
    let verdict = match t {
        Trend::Down if slope < -SLOPE_TOL => Verdict::Supports,
        Trend::Up | Trend::Flat => Verdict::Fails,
        Trend::Down if slope >= -SLOPE_TOL => Verdict::Fails,
        _ => Verdict::Inconclusive,
    };
    notes.push(format!("tail log-log slope {slope:.4}"));
    Outcome {
        verdict,
        limit: if verdict == Verdict::Supports {
            Some(0.0)
        } else {
            richardson_limit(values).or(Some(last))
        },
    }
}

fn bounded(ns: &[u32], values: &[f64], notes: &mut Vec<String>) -> Outcome {
    if values.iter().any(|v| !v.is_finite()) {
        notes.push("non-finite probe value".into());
        return Outcome {
            verdict: Verdict::Fails,
            limit: None,
        };
    }
    let k = values.len();
    let (tn, tv) = (&ns[k - TAIL..], &values[k - TAIL..]);
    let slope = loglog_slope(tn, tv).unwrap_or(0.0);
    notes.push(format!("tail log-log slope {slope:.4}"));
    let verdict = if slope < SLOPE_TOL {
        Verdict::Supports
    } else if trend(tv) == Trend::Up {
        Verdict::Fails
    } else {
        Verdict::Inconclusive
    };
    Outcome {
        verdict,
        limit: richardson_limit(values).or(Some(values[k - 1])),
    }
}

fn report(
    hypothesis: &str,
    seq: &KernelSequence,
    h: Option<Hurst>,
    probes: Vec<Probe>,
    outcome: Outcome,
    notes: Vec<String>,
) -> HypothesisReport {
    HypothesisReport {
        hypothesis: hypothesis.to_string(),
        family: seq.name(),
        hurst: h.map(Hurst::value),
        probes,
        verdict: outcome.verdict,
        extrapolated_limit: outcome.limit,
        notes,
    }
}

fn eval_probes(ns: &[u32], f: impl Fn(u32) -> Result<f64> + Sync) -> Result<Vec<f64>> {
    ns.par_iter().map(|&n| f(n)).collect()
}

/// `∫_a^1 φ²` for a piecewise-linear function.
fn sq_integral_from(f: &CellFunction, a: f64) -> f64 {
    let (l, r) = (f.left(), f.right());
    f.grid()
        .times()
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] > a)
        .map(|(i, w)| {
            let (lo, hi) = (w[0].max(a), w[1]);
            let slope = (r[i] - l[i]) / (w[1] - w[0]);
            let fl = l[i] + slope * (lo - w[0]);
            (hi - lo) * (fl * fl + fl * r[i] + r[i] * r[i]) / 3.0
        })
        .sum()
}

/// (h1): `∫_{α_n}^1 φ_n² → L` and `∫_0^1 φ_n² → L` with `L > 0`.
pub fn check_h1(seq: &KernelSequence, probe_ns: &[u32]) -> Result<HypothesisReport> {
    check_ladder(probe_ns)?;
    let pair = |n: u32| -> Result<(f64, f64)> {
        let a = seq.alpha(n);
        match seq.monomial_scale() {
            Some(s) => {
                let nf = f64::from(n);
                let c = nf.powf(2.0 * s) / (2.0 * nf + 1.0);
                Ok((c * (1.0 - a.powf(2.0 * nf + 1.0)), c))
            }
            None => {
                let f = seq.on_grid(n, seq.table_grid().expect("table family"))?;
                Ok((sq_integral_from(&f, a), sq_integral_from(&f, 0.0)))
            }
        }
    };
    let pairs: Vec<(f64, f64)> = probe_ns
        .par_iter()
        .map(|&n| pair(n))
        .collect::<Result<_>>()?;
    let window: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let full: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut notes = Vec::new();
    let w = converges_to_positive(probe_ns, &window, seq.claimed_l, &mut notes);
    let f = converges_to_positive(probe_ns, &full, seq.claimed_l, &mut notes);
    let outcome = match (w.verdict, f.verdict, w.limit, f.limit) {
        (Verdict::Supports, Verdict::Supports, Some(lw), Some(lf)) => {
            if ((lw - lf) / lf).abs() <= CLAIM_TOL {
                Outcome {
                    verdict: Verdict::Supports,
                    limit: Some(lw),
                }
            } else {
                notes.push(format!("window limit {lw} and full limit {lf} differ"));
                Outcome {
                    verdict: Verdict::Fails,
                    limit: Some(lw),
                }
            }
        }
        (Verdict::Fails, _, _, _) | (_, Verdict::Fails, _, _) => Outcome {
            verdict: Verdict::Fails,
            limit: w.limit,
        },
        _ => Outcome {
            verdict: Verdict::Inconclusive,
            limit: w.limit,
        },
    };
    let probes = probe_ns
        .iter()
        .zip(pairs)
        .map(|(&n, (wv, fv))| Probe {
            n,
            value: wv,
            aux: Some(fv),
        })
        .collect();
    Ok(report("h1", seq, None, probes, outcome, notes))
}

fn sup_on(seq: &KernelSequence, n: u32, delta: f64) -> Result<f64> {
    match seq.monomial_scale() {
        Some(s) => Ok(f64::from(n).powf(s) * delta.powi(n as i32)),
        None => {
            let grid = seq.table_grid().expect("table family");
            let f = seq.on_grid(n, grid)?;
            let mut m = f.eval(delta);
            for (t, v) in grid.times().iter().zip(f.left()) {
                if *t <= delta {
                    m = m.max(*v);
                }
            }
            Ok(m)
        }
    }
}

/// (h2), (h3) and (h3m): sup-type decay away from `t = 1`. The reported
/// value at each `n` is the largest over `delta_list`.
pub fn check_sup_conditions(
    seq: &KernelSequence,
    probe_ns: &[u32],
    delta_list: &[f64],
    variant: SupVariant,
) -> Result<HypothesisReport> {
    check_ladder(probe_ns)?;
    if delta_list.is_empty() || delta_list.iter().any(|d| !(0.0..1.0).contains(d)) {
        return usage("δ values must lie in [0, 1)");
    }
    let power = match variant {
        SupVariant::H2 => 0,
        SupVariant::H3 => 1,
        SupVariant::H3m(m) if m >= 2 => m - 1,
        SupVariant::H3m(m) => return usage(format!("h3m needs m ≥ 2, got {m}")),
    };
    let values = eval_probes(probe_ns, |n| {
        let whole = if power > 0 {
            sup_on(seq, n, 1.0)?.powi(power as i32)
        } else {
            1.0
        };
        let mut worst = 0.0f64;
        for &d in delta_list {
            worst = worst.max(sup_on(seq, n, d)? * whole);
        }
        Ok(worst)
    })?;
    let mut notes = Vec::new();
    let outcome = decays(probe_ns, &values, &mut notes);
    let id = match variant {
        SupVariant::H2 => "h2".to_string(),
        SupVariant::H3 => "h3".to_string(),
        SupVariant::H3m(m) => format!("h3m({m})"),
    };
    Ok(report(
        &id,
        seq,
        None,
        plain_probes(probe_ns, &values),
        outcome,
        notes,
    ))
}

fn plain_probes(ns: &[u32], values: &[f64]) -> Vec<Probe> {
    ns.iter()
        .zip(values)
        .map(|(&n, &value)| Probe {
            n,
            value,
            aux: None,
        })
        .collect()
}

/// `‖φ_n‖²_𝔥`.
pub fn h_norm_sq(seq: &KernelSequence, h: Hurst, n: u32) -> Result<f64> {
    let hv = h.value();
    match seq.monomial_scale() {
        Some(s) => {
            let nf = f64::from(n);
            let c = nf.powf(2.0 * s);
            if hv < 0.5 {
                Ok(nf.powf(2.0 * s - 2.0 * hv) * monomial_h_norm(n, h)?)
            } else if hv > 0.5 {
                Ok(c * h.alpha() * closed_form_double_integral(n, n, 2.0 * hv - 2.0)?)
            } else {
                Ok(c / (2.0 * nf + 1.0))
            }
        }
        None => {
            let f = seq.on_grid(n, seq.table_grid().expect("table family"))?;
            let method = if hv < 0.5 {
                InnerMethod::KStar
            } else if hv > 0.5 {
                InnerMethod::WeightedDoubleIntegral
            } else {
                InnerMethod::IncrementBilinear
            };
            inner_product_h(h, &f, &f, method)
        }
    }
}

/// (h4): `‖φ_n‖²_𝔥 → L > 0`.
pub fn check_h4(seq: &KernelSequence, h: Hurst, probe_ns: &[u32]) -> Result<HypothesisReport> {
    check_ladder(probe_ns)?;
    let values = eval_probes(probe_ns, |n| h_norm_sq(seq, h, n))?;
    let mut notes = Vec::new();
    let outcome = converges_to_positive(probe_ns, &values, seq.claimed_l, &mut notes);
    Ok(report(
        "h4",
        seq,
        Some(h),
        plain_probes(probe_ns, &values),
        outcome,
        notes,
    ))
}

/// `‖φ_n‖_{L^r}`.
pub fn lr_norm(seq: &KernelSequence, n: u32, r: f64) -> Result<f64> {
    match seq.monomial_scale() {
        Some(s) => {
            let nf = f64::from(n);
            Ok((nf.powf(s * r) / (nf * r + 1.0)).powf(1.0 / r))
        }
        None => {
            let f = seq.on_grid(n, seq.table_grid().expect("table family"))?;
            let rule = gauss_legendre(4);
            let total: f64 = f
                .grid()
                .times()
                .windows(2)
                .map(|w| apply_rule(&rule, |t| f.eval(t).abs().powf(r), w[0], w[1]))
                .sum();
            Ok(total.powf(1.0 / r))
        }
    }
}

/// (h5): `‖φ_n‖_{L^r} → 0` for the given `r < 1/H`.
pub fn check_h5(
    seq: &KernelSequence,
    h: Hurst,
    probe_ns: &[u32],
    r: f64,
) -> Result<HypothesisReport> {
    check_ladder(probe_ns)?;
    if !(r > 0.0 && r < 1.0 / h.value()) {
        return usage(format!(
            "h5 needs 0 < r < 1/H = {}, got r={r}",
            1.0 / h.value()
        ));
    }
    let values = eval_probes(probe_ns, |n| lr_norm(seq, n, r))?;
    let mut notes = vec![format!("r = {r}")];
    let outcome = decays(probe_ns, &values, &mut notes);
    Ok(report(
        "h5",
        seq,
        Some(h),
        plain_probes(probe_ns, &values),
        outcome,
        notes,
    ))
}

/// `∫_0^1 (s^{2H-1} + (1-s)^{2H-1}) φ_n(s)² ds`.
pub fn h6_weighted_integral(seq: &KernelSequence, h: Hurst, n: u32) -> Result<f64> {
    let hv = h.value();
    let b = 2.0 * hv - 1.0;
    match seq.monomial_scale() {
        Some(s) => {
            let nf = f64::from(n);
            // ∫ s^{2n+2H-1} = 1/(2n+2H), ∫ (1-s)^{2H-1} s^{2n} = B(2n+1, 2H)
            Ok(nf.powf(2.0 * s)
                * (1.0 / (2.0 * nf + 2.0 * hv) + ln_beta(2.0 * nf + 1.0, 2.0 * hv)?.exp()))
        }
        None => {
            let f = seq.on_grid(n, seq.table_grid().expect("table family"))?;
            let w = |t: f64| (t.powf(b) + (1.0 - t).powf(b)) * f.eval(t).powi(2);
            let times = f.grid().times();
            let last = times.len() - 2;
            let rule = gauss_legendre(6);
            let opts = QuadOptions::with_tol(1e-12, 1e-9);
            let mut total = 0.0;
            for (i, c) in times.windows(2).enumerate() {
                total += if i == 0 {
                    integrate_endpoint_singular(w, c[0], c[1], b, 0.0, opts)?
                } else if i == last {
                    integrate_endpoint_singular(w, c[0], c[1], 0.0, b, opts)?
                } else {
                    apply_rule(&rule, w, c[0], c[1])
                };
            }
            Ok(total)
        }
    }
}

/// (h6): `sup_n ∫ (s^{2H-1} + (1-s)^{2H-1}) φ_n² < ∞`, for `H < 1/2`.
pub fn check_h6(seq: &KernelSequence, h: Hurst, probe_ns: &[u32]) -> Result<HypothesisReport> {
    check_ladder(probe_ns)?;
    if h.value() >= 0.5 {
        return usage(format!("h6 is a condition for H < 1/2, got H={h}"));
    }
    let values = eval_probes(probe_ns, |n| h6_weighted_integral(seq, h, n))?;
    let mut notes = Vec::new();
    let outcome = bounded(probe_ns, &values, &mut notes);
    Ok(report(
        "h6",
        seq,
        Some(h),
        plain_probes(probe_ns, &values),
        outcome,
        notes,
    ))
}

/// `∫_0^δ (∫_s^δ |φ_n(t) - φ_n(s)| (t-s)^{H-3/2} dt)² ds`.
pub fn h7_functional(seq: &KernelSequence, h: Hurst, n: u32, delta: f64) -> Result<f64> {
    let e = h.value() - 0.5;
    let table = match seq.monomial_scale() {
        Some(_) => None,
        None => Some(seq.on_grid(n, seq.table_grid().expect("table family"))?),
    };
    let phi = |t: f64| match &table {
        Some(f) => f.eval(t),
        None => seq.eval(n, t).unwrap_or(f64::NAN),
    };
    let inner_opts = QuadOptions::with_tol(1e-300, 1e-9);
    let inner = |s: f64| -> f64 {
        let ps = phi(s);
        let g = |t: f64| (phi(t) - ps).abs() * (t - s).powf(e - 1.0);
        integrate_endpoint_singular(g, s, delta, e, 0.0, inner_opts).unwrap_or(f64::NAN)
    };
    integrate(
        |s| inner(s).powi(2),
        0.0,
        delta,
        QuadOptions::with_tol(1e-300, 1e-7),
    )
}

/// (h7): the nested singular functional tends to 0 for each `δ < 1`.
pub fn check_h7(
    seq: &KernelSequence,
    h: Hurst,
    probe_ns: &[u32],
    delta_list: &[f64],
) -> Result<HypothesisReport> {
    check_ladder(probe_ns)?;
    if h.value() >= 0.5 {
        return usage(format!("h7 is a condition for H < 1/2, got H={h}"));
    }
    if delta_list.is_empty() || delta_list.iter().any(|d| !(*d > 0.0 && *d < 1.0)) {
        return usage("δ values must lie in (0, 1)");
    }
    let mut notes = Vec::new();
    let values = match eval_probes(probe_ns, |n| {
        let mut worst = 0.0f64;
        for &d in delta_list {
            worst = worst.max(h7_functional(seq, h, n, d)?);
        }
        Ok(worst)
    }) {
        Ok(v) => v,
        Err(e) => {
            notes.push(format!("quadrature failed: {e}"));
            let outcome = Outcome {
                verdict: Verdict::Inconclusive,
                limit: None,
            };
            return Ok(report("h7", seq, Some(h), Vec::new(), outcome, notes));
        }
    };
    let outcome = decays(probe_ns, &values, &mut notes);
    Ok(report(
        "h7",
        seq,
        Some(h),
        plain_probes(probe_ns, &values),
        outcome,
        notes,
    ))
}

/// Grid used for `K*φ_n` of a monomial: about eight cells per `1/n`.
pub fn h8_grid(n: u32) -> Result<GridSpec> {
    let cells = (8 * n as usize).clamp(1 << 11, 1 << 15);
    GridSpec::uniform(cells)
}

/// `∫_0^1 |(K*φ_n)(s)|^p ds`.
pub fn kstar_lp(seq: &KernelSequence, h: Hurst, n: u32, p: f64) -> Result<f64> {
    let grid = match seq.table_grid() {
        Some(g) => g.clone(),
        None => h8_grid(n)?,
    };
    let op = KStarOperator::new(h, &grid)?;
    Ok(op.apply(&seq.on_grid(n, &grid)?)?.lp_integral(p))
}

/// (h8): `∫ |K*φ_n|^p → 0` for the given `p > 1`, `H < 1/2`.
pub fn check_h8(
    seq: &KernelSequence,
    h: Hurst,
    probe_ns: &[u32],
    p: f64,
) -> Result<HypothesisReport> {
    check_ladder(probe_ns)?;
    if h.value() >= 0.5 {
        return usage(format!("h8 is a condition for H < 1/2, got H={h}"));
    }
    if !(p > 1.0) {
        return usage(format!("h8 needs p > 1, got p={p}"));
    }
    // probes run one after another: each K* application is parallel already
    let values = probe_ns
        .iter()
        .map(|&n| kstar_lp(seq, h, n, p))
        .collect::<Result<Vec<f64>>>()?;
    let mut notes = vec![format!("p = {p}")];
    if p >= 2.0 {
        notes.push("decay of the K* norm is only expected for p < 2".into());
    }
    if h.value() <= 0.25 {
        notes.push("the monomial limit theorem is stated for H > 1/4 only".into());
    }
    let outcome = decays(probe_ns, &values, &mut notes);
    Ok(report(
        "h8",
        seq,
        Some(h),
        plain_probes(probe_ns, &values),
        outcome,
        notes,
    ))
}
