use crate::error::{domain, Result};
use crate::fbm::Hurst;
use crate::grid::GridSpec;

pub(crate) fn rh(h: f64, t: f64, s: f64) -> f64 {
    let two_h = 2.0 * h;
    0.5 * (t.powf(two_h) + s.powf(two_h) - (t - s).abs().powf(two_h))
}

/// `R_H(t, s) = ½(t^{2H} + s^{2H} - |t - s|^{2H})`.
pub fn covariance_rh(h: Hurst, t: f64, s: f64) -> Result<f64> {
    if !(t >= 0.0 && s >= 0.0) || !t.is_finite() || !s.is_finite() {
        return domain(format!(
            "covariance needs nonnegative times, got ({t}, {s})"
        ));
    }
    Ok(rh(h.value(), t, s))
}

/// Autocovariance of unit-step fractional Gaussian noise at lag `k`.
pub fn fgn_autocovariance(h: Hurst, k: usize) -> f64 {
    let two_h = 2.0 * h.value();
    let k = k as f64;
    0.5 * ((k + 1.0).powf(two_h) - 2.0 * k.powf(two_h) + (k - 1.0).abs().powf(two_h))
}

/// Covariance matrix of the increments `ΔB_i = B(t_{i+1}) - B(t_i)`.
#[derive(Debug, Clone)]
pub struct IncrementCovariance {
    pub hurst: Hurst,
    pub grid: GridSpec,
    /// Row-major `N × N`.
    pub matrix: Vec<f64>,
}

impl IncrementCovariance {
    pub fn dim(&self) -> usize {
        self.grid.n_intervals()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.dim() + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }
}

pub fn increment_covariance(h: Hurst, grid: &GridSpec) -> IncrementCovariance {
    let n = grid.n_intervals();
    let t = grid.times();
    let hv = h.value();
    let mut matrix = vec![0.0; n * n];
    if let Some(step) = grid.step() {
        let scale = step.powf(2.0 * hv);
        let gamma: Vec<f64> = (0..n).map(|k| scale * fgn_autocovariance(h, k)).collect();
        for i in 0..n {
            for j in 0..n {
                matrix[i * n + j] = gamma[i.abs_diff(j)];
            }
        }
    } else {
        for i in 0..n {
            for j in 0..=i {
                let v =
                    rh(hv, t[i + 1], t[j + 1]) - rh(hv, t[i + 1], t[j]) - rh(hv, t[i], t[j + 1])
                        + rh(hv, t[i], t[j]);
                matrix[i * n + j] = v;
                matrix[j * n + i] = v;
            }
        }
    }
    IncrementCovariance {
        hurst: h,
        grid: grid.clone(),
        matrix,
    }
}
