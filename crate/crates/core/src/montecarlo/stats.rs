use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};

/// Sum in a fixed binary tree order, independent of how samples were produced.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 32 {
        return x.iter().sum();
    }
    let mid = x.len() / 2;
    pairwise_sum(&x[..mid]) + pairwise_sum(&x[mid..])
}

fn mean(x: &[f64]) -> f64 {
    pairwise_sum(x) / x.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    pub var: f64,
    pub se_mean: f64,
    pub se_var: f64,
}

impl Moments {
    /// `|var - target| < k·se_var + allowance`.
    pub fn var_within(&self, target: f64, k: f64, allowance: f64) -> bool {
        (self.var - target).abs() < k * self.se_var + allowance
    }

    pub fn mean_within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.se_mean
    }
}

/// Mean, unbiased variance and their standard errors; the variance SE uses
/// the fourth central moment.
pub fn moments_with_se(x: &[f64]) -> Result<Moments> {
    let n = x.len();
    if n < 2 {
        return usage(format!("moments need at least 2 samples, got {n}"));
    }
    let nf = n as f64;
    let m = mean(x);
    let d2: Vec<f64> = x.iter().map(|v| (v - m) * (v - m)).collect();
    let d4: Vec<f64> = d2.iter().map(|v| v * v).collect();
    let m2 = pairwise_sum(&d2) / nf;
    let m4 = pairwise_sum(&d4) / nf;
    let var = m2 * nf / (nf - 1.0);
    let var_of_var = ((m4 - m2 * m2 * (nf - 3.0) / (nf - 1.0)) / nf).max(0.0);
    Ok(Moments {
        count: n,
        mean: m,
        var,
        se_mean: (var / nf).sqrt(),
        se_var: var_of_var.sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub probe: f64,
    pub r: f64,
    pub se: f64,
}

/// Pearson correlation with the normal-theory SE `(1 - r²)/√(M - 1)`.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 3 {
        return usage("correlation needs two samples of equal size ≥ 3");
    }
    let (mx, my) = (mean(x), mean(y));
    let sxy: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    let sxx: Vec<f64> = x.iter().map(|a| (a - mx) * (a - mx)).collect();
    let syy: Vec<f64> = y.iter().map(|b| (b - my) * (b - my)).collect();
    let den = (pairwise_sum(&sxx) * pairwise_sum(&syy)).sqrt();
    let r = if den > 0.0 {
        pairwise_sum(&sxy) / den
    } else {
        0.0
    };
    Ok((r, (1.0 - r * r) / ((x.len() - 1) as f64).sqrt()))
}

/// Correlation of `f` with the path value at each probe time.
pub fn probe_correlations(f: &[f64], probes: &[(f64, Vec<f64>)]) -> Result<Vec<Correlation>> {
    probes
        .iter()
        .map(|(t, v)| {
            if !(0.0..=1.0).contains(t) {
                return usage(format!("probe time {t} outside [0, 1]"));
            }
            let (r, se) = pearson(f, v)?;
            Ok(Correlation { probe: *t, r, se })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Largest gap between the two empirical CDFs.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// `P(K > λ)` for the Kolmogorov distribution.
fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let kf = f64::from(k);
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic p-value
/// (Stephens' small-sample correction).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.len() < 50 || b.len() < 50 {
        return usage(format!(
            "KS needs at least 50 samples per side, got {} and {}",
            a.len(),
            b.len()
        ));
    }
    let d = ks_statistic(a, b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let en = (na * nb / (na + nb)).sqrt();
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_survival((en + 0.12 + 0.11 / en) * d),
    })
}
