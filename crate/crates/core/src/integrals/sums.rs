use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use super::{IntegralSample, IntegrandSpec, MultiParam};
use crate::error::{domain, usage, Result};
use crate::fbm::{FbmPath, Hurst};
use crate::grid::GridSpec;

/// Largest supported order of an iterated integral.
pub const MAX_ITERATED_ORDER: u32 = 4;

/// Norm used to normalize the second-chaos form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormConvention {
    /// `Σ φ_i² Δt_i`.
    Deterministic,
    /// `Σ φ_i² (ΔB_i)²`; makes the identity with the iterated sum exact.
    #[default]
    QuadraticVariation,
}

/// Integrand frozen at a node `τ` and integrated over the cells from
/// `window` on: `u(τ) Σ_{i ≥ window} φ_i ΔB_i` minus its trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Freeze {
    pub node: usize,
    pub window: usize,
}

impl Freeze {
    /// Freeze at the node nearest `tau`; the window starts at the first node
    /// at or after `window_start`.
    pub fn at(grid: &GridSpec, tau: f64, window_start: f64) -> Self {
        Self {
            node: grid.nearest_node(tau),
            window: grid.node_at_or_after(window_start).min(grid.n_intervals()),
        }
    }
}

fn check_phi(path: &FbmPath, phi: &[f64]) -> Result<()> {
    let n = path.grid().n_intervals();
    if phi.len() != n {
        return usage(format!(
            "kernel weights have {} cells, the path has {n}",
            phi.len()
        ));
    }
    Ok(())
}

fn require_half(path: &FbmPath, what: &str) -> Result<()> {
    if !path.hurst().is_half() {
        return usage(format!(
            "{what} needs H = 1/2, got H = {}; use skorohod_wick_sum",
            path.hurst()
        ));
    }
    Ok(())
}

fn warn_rough(h: Hurst) {
    static WARNED: AtomicBool = AtomicBool::new(false);
    if h.value() <= 0.25 && !WARNED.swap(true, Ordering::Relaxed) {
        log::warn!("Wick-Riemann sums with path-dependent integrands are not expected to converge for H = {h} <= 1/4");
    }
}

type TraceKey = (u64, usize, u64, Option<usize>);

/// `R(τ, t_{i+1}) - R(τ, t_i)` per cell, with `τ = t_i` when `tau` is
/// `None`. Cached for uniform grids.
fn trace_coefficients(h: Hurst, grid: &GridSpec, tau: Option<usize>) -> Arc<Vec<f64>> {
    static CACHE: OnceLock<Mutex<HashMap<TraceKey, Arc<Vec<f64>>>>> = OnceLock::new();
    let compute = || {
        let hv = h.value();
        let t = grid.times();
        let r = |a: f64, b: f64| crate::fbm::rh(hv, a, b);
        Arc::new(
            t.windows(2)
                .map(|w| match tau {
                    None => r(w[0], w[1]) - r(w[0], w[0]),
                    Some(k) => r(t[k], w[1]) - r(t[k], w[0]),
                })
                .collect::<Vec<_>>(),
        )
    };
    if !grid.is_uniform() {
        return compute();
    }
    let key = (
        h.value().to_bits(),
        grid.n_intervals(),
        grid.horizon().to_bits(),
        tau,
    );
    let cache = CACHE.get_or_init(Default::default);
    if let Some(c) = cache.lock().expect("trace cache").get(&key) {
        return Arc::clone(c);
    }
    let c = compute();
    cache
        .lock()
        .expect("trace cache")
        .insert(key, Arc::clone(&c));
    c
}

/// Left-point Itô sum `Σ φ_i u(t_i) ΔB_i` on a Brownian path.
pub fn ito_forward_sum(path: &FbmPath, u: &IntegrandSpec, phi: &[f64]) -> Result<IntegralSample> {
    require_half(path, "ito_forward_sum")?;
    check_phi(path, phi)?;
    u.check_single(path.grid().n_points())?;
    let b = path.values();
    let value = phi
        .iter()
        .enumerate()
        .map(|(i, p)| p * u.at_node(path, i) * (b[i + 1] - b[i]))
        .sum();
    Ok(IntegralSample::plain(value))
}

/// Wick–Riemann sum
/// `Σ φ_i [u(t_i) ΔB_i - f'(B(t_i)) (R(t_i, t_{i+1}) - R(t_i, t_i))]`.
pub fn skorohod_wick_sum(path: &FbmPath, u: &IntegrandSpec, phi: &[f64]) -> Result<IntegralSample> {
    check_phi(path, phi)?;
    u.check_single(path.grid().n_points())?;
    let b = path.values();
    let mut forward = 0.0;
    let mut trace = 0.0;
    if u.is_path_dependent() {
        warn_rough(path.hurst());
        let c = trace_coefficients(path.hurst(), path.grid(), None);
        for (i, p) in phi.iter().enumerate() {
            forward += p * u.at_node(path, i) * (b[i + 1] - b[i]);
            trace -= p * u.derivative_factor(path, i) * c[i];
        }
    } else {
        for (i, p) in phi.iter().enumerate() {
            forward += p * u.at_node(path, i) * (b[i + 1] - b[i]);
        }
    }
    Ok(IntegralSample {
        value: forward + trace,
        path_id: 0,
        n: 0,
        forward_component: Some(forward),
        trace_component: Some(trace),
    })
}

/// Skorohod integral of `u(τ) φ 1_{window}`:
/// `u(τ) δ(φ 1_{window}) - f'(B(τ)) Σ_{i ≥ window} φ_i (R(τ, t_{i+1}) - R(τ, t_i))`.
pub fn skorohod_wick_sum_frozen(
    path: &FbmPath,
    u: &IntegrandSpec,
    phi: &[f64],
    freeze: Freeze,
) -> Result<IntegralSample> {
    check_phi(path, phi)?;
    u.check_single(path.grid().n_points())?;
    let grid = path.grid();
    if freeze.node > grid.n_intervals() || freeze.window > grid.n_intervals() {
        return usage("freeze node or window lies outside the grid");
    }
    let b = path.values();
    let s: f64 = (freeze.window..phi.len())
        .map(|i| phi[i] * (b[i + 1] - b[i]))
        .sum();
    let forward = u.at_node(path, freeze.node) * s;
    let mut trace = 0.0;
    let du = u.derivative_factor(path, freeze.node);
    if du != 0.0 {
        let c = trace_coefficients(path.hurst(), grid, Some(freeze.node));
        let tr: f64 = (freeze.window..phi.len()).map(|i| phi[i] * c[i]).sum();
        trace = -du * tr;
    }
    Ok(IntegralSample {
        value: forward + trace,
        path_id: 0,
        n: 0,
        forward_component: Some(forward),
        trace_component: Some(trace),
    })
}

/// `Σ_{i₁ < … < i_m} u · φ_{i₁}ΔB_{i₁} ⋯ φ_{i_m}ΔB_{i_m}` with `u` a function
/// of the earliest index, by running prefix sums.
pub fn iterated_ito_sum(
    path: &FbmPath,
    u: &IntegrandSpec,
    phi: &[f64],
    m: u32,
) -> Result<IntegralSample> {
    require_half(path, "iterated_ito_sum")?;
    check_phi(path, phi)?;
    if m == 0 || m > MAX_ITERATED_ORDER {
        return usage(format!(
            "iterated sums support 1 ≤ m ≤ {MAX_ITERATED_ORDER}, got m={m}"
        ));
    }
    let first_arg = match u {
        IntegrandSpec::Multi { param } => *param == MultiParam::FirstArgPath,
        IntegrandSpec::Constant { value } if *value == 1.0 => false,
        _ => return usage("iterated sums take u ≡ 1 or u = B(t₁)"),
    };
    let b = path.values();
    let dw: Vec<f64> = phi
        .iter()
        .enumerate()
        .map(|(i, p)| p * (b[i + 1] - b[i]))
        .collect();
    // level[i] = sum over chains ending at i; prefix over i < k feeds the next level
    let mut level: Vec<f64> = dw
        .iter()
        .enumerate()
        .map(|(i, w)| if first_arg { b[i] * w } else { *w })
        .collect();
    for _ in 1..m {
        let mut prefix = 0.0;
        for (i, w) in dw.iter().enumerate() {
            let below = prefix;
            prefix += level[i];
            level[i] = below * w;
        }
    }
    Ok(IntegralSample::plain(level.iter().sum()))
}

/// Iterated Itô integral of the step kernel with cell values `phi`, including
/// the within-cell terms: `Π_i exp(λφ_iΔB_i - λ²φ_i²Δt_i/2)` expanded to
/// order `λ^m`, where cell `i` contributes `φ_i^k Δt_i^{k/2} H_k(ΔB_i/√Δt_i)/k!`.
/// For `u = B(t₁)` the chain is weighted by `B` at the left end of the cell
/// where it starts.
pub fn iterated_step_integral(
    path: &FbmPath,
    u: &IntegrandSpec,
    phi: &[f64],
    m: u32,
) -> Result<IntegralSample> {
    require_half(path, "iterated_step_integral")?;
    check_phi(path, phi)?;
    if m == 0 || m > MAX_ITERATED_ORDER {
        return usage(format!(
            "iterated sums support 1 ≤ m ≤ {MAX_ITERATED_ORDER}, got m={m}"
        ));
    }
    let first_arg = match u {
        IntegrandSpec::Multi { param } => *param == MultiParam::FirstArgPath,
        IntegrandSpec::Constant { value } if *value == 1.0 => false,
        _ => return usage("iterated sums take u ≡ 1 or u = B(t₁)"),
    };
    let m = m as usize;
    let b = path.values();
    let t = path.grid().times();
    let mut level = vec![0.0; m + 1];
    level[0] = 1.0;
    let mut c = vec![0.0; m + 1];
    for (i, p) in phi.iter().enumerate() {
        if *p == 0.0 {
            continue;
        }
        let dt = t[i + 1] - t[i];
        let sd = dt.sqrt();
        let x = (b[i + 1] - b[i]) / sd;
        // c_k = (φ√Δt)^k He_k(x) / k!
        let (mut h_prev, mut h) = (1.0, x);
        let mut pow = p * sd;
        c[1] = pow * h;
        for k in 2..=m {
            let next = x * h - (k - 1) as f64 * h_prev;
            h_prev = h;
            h = next;
            pow *= p * sd / k as f64;
            c[k] = pow * h;
        }
        let start = if first_arg { b[i] } else { 1.0 };
        for j in (1..=m).rev() {
            let mut acc = level[j];
            for k in 1..j {
                acc += level[j - k] * c[k];
            }
            acc += start * c[j];
            level[j] = acc;
        }
    }
    Ok(IntegralSample::plain(level[m]))
}

/// `½‖φ‖² H₂(S/‖φ‖)` over the cells from the first node at or after
/// `window_start`, with `S = Σ φ_i ΔB_i`.
pub fn second_chaos_hermite(
    path: &FbmPath,
    phi: &[f64],
    window_start: f64,
    convention: NormConvention,
) -> Result<f64> {
    require_half(path, "second_chaos_hermite")?;
    check_phi(path, phi)?;
    let grid = path.grid();
    let k0 = grid.node_at_or_after(window_start);
    let b = path.values();
    let t = grid.times();
    let (mut s, mut q) = (0.0, 0.0);
    for i in k0..phi.len() {
        let db = b[i + 1] - b[i];
        s += phi[i] * db;
        q += phi[i]
            * phi[i]
            * match convention {
                NormConvention::Deterministic => t[i + 1] - t[i],
                NormConvention::QuadraticVariation => db * db,
            };
    }
    if !(q > 0.0) {
        return domain("the kernel has zero discrete norm on the window");
    }
    // ½ q H₂(S/√q) = ½(S² - q)
    Ok(0.5 * (s * s - q))
}

/// Exact variance of the Wick–Riemann sum for deterministic or path-linear
/// `u`, from the covariance of fBm at the grid nodes.
pub fn exact_wick_variance(
    h: Hurst,
    grid: &GridSpec,
    u: &IntegrandSpec,
    phi: &[f64],
) -> Result<f64> {
    let n = grid.n_intervals();
    if phi.len() != n {
        return usage(format!(
            "kernel weights have {} cells, the grid has {n}",
            phi.len()
        ));
    }
    let hv = h.value();
    let t = grid.times();
    let p: Vec<f64> = t.iter().map(|x| x.powf(2.0 * hv)).collect();
    let dist: Box<dyn Fn(usize, usize) -> f64> = match grid.step() {
        Some(st) => {
            let table: Vec<f64> = (0..=n).map(|k| (k as f64 * st).powf(2.0 * hv)).collect();
            Box::new(move |a, b| table[a.abs_diff(b)])
        }
        None => Box::new(|a, b| (t[a] - t[b]).abs().powf(2.0 * hv)),
    };
    let r = |a: usize, b: usize| 0.5 * (p[a] + p[b] - dist(a, b));
    let yy = |i: usize, j: usize| r(i + 1, j + 1) - r(i + 1, j) - r(i, j + 1) + r(i, j);
    let xy = |i: usize, j: usize| r(i, j + 1) - r(i, j);
    let support: Vec<usize> = (0..n).filter(|&i| phi[i] != 0.0).collect();
    match u {
        IntegrandSpec::Constant { .. } | IntegrandSpec::Deterministic { .. } => {
            u.check_single(grid.n_points())?;
            let g = |i: usize| match u {
                IntegrandSpec::Constant { value } => *value,
                IntegrandSpec::Deterministic { node_values } => node_values[i],
                _ => unreachable!(),
            };
            let a: Vec<f64> = (0..n).map(|i| phi[i] * g(i)).collect();
            Ok(support
                .iter()
                .map(|&i| support.iter().map(|&j| a[i] * a[j] * yy(i, j)).sum::<f64>())
                .sum())
        }
        IntegrandSpec::PathLinear => Ok(support
            .iter()
            .map(|&i| {
                support
                    .iter()
                    .map(|&j| phi[i] * phi[j] * (r(i, j) * yy(i, j) + xy(i, j) * xy(j, i)))
                    .sum::<f64>()
            })
            .sum()),
        _ => usage("exact variances cover deterministic and path-linear integrands"),
    }
}
