//! Exact Gaussian sampling of fBm on a grid: Cholesky factorization of the
//! increment covariance, or circulant embedding with the FFT.

use std::sync::Arc;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{domain, usage, Error, Result};
use crate::fbm::{fgn_autocovariance, increment_covariance, Hurst, IncrementCovariance};
use crate::grid::GridSpec;
use crate::rng::{stream_rng, PATH_STREAM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerRoute {
    /// Reference route, any grid, `O(N²)` per path after an `O(N³)` setup.
    Cholesky,
    /// Circulant embedding, uniform grids only, `O(N log N)` per path.
    #[default]
    Fft,
}

/// Eigenvalues above `-EIG_CLAMP · max λ` are treated as roundoff and zeroed.
const EIG_CLAMP: f64 = 1e-10;
const JITTER: f64 = 1e-12;

/// One sampled trajectory, `values[k] = B^H(t_k)` with `values[0] = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct FbmPath {
    hurst: Hurst,
    grid: Arc<GridSpec>,
    values: Vec<f64>,
}

impl FbmPath {
    /// Wrap externally produced values; checks the path invariants.
    pub fn new(hurst: Hurst, grid: &GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return domain(format!(
                "path has {} values for {} grid points",
                values.len(),
                grid.n_points()
            ));
        }
        if values[0] != 0.0 || values.iter().any(|v| !v.is_finite()) {
            return domain("a path must start at 0 and be finite");
        }
        Ok(Self {
            hurst,
            grid: Arc::new(grid.clone()),
            values,
        })
    }

    pub fn hurst(&self) -> Hurst {
        self.hurst
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `B(t_{i+1}) - B(t_i)`.
    pub fn increments(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Value at the grid node nearest to `t`.
    pub fn at(&self, t: f64) -> f64 {
        self.values[self.grid.nearest_node(t)]
    }

    /// Terminal value `B(T)`.
    pub fn terminal(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

#[derive(Debug, Clone)]
pub struct FbmBatch {
    pub hurst: Hurst,
    pub grid: GridSpec,
    pub seed: u64,
    pub paths: Vec<FbmPath>,
}

impl FbmBatch {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn increment_covariance(&self) -> IncrementCovariance {
        increment_covariance(self.hurst, &self.grid)
    }
}

enum Factor {
    /// Row-major lower triangle.
    Cholesky(Vec<f64>),
    Fft {
        sqrt_eig: Vec<f64>,
        fft: Arc<dyn Fft<f64>>,
        scale: f64,
    },
}

/// A sampler bound to `(H, grid, route)` with the factorization done once.
pub struct FbmSampler {
    hurst: Hurst,
    grid: Arc<GridSpec>,
    route: SamplerRoute,
    factor: Factor,
}

impl std::fmt::Debug for FbmSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FbmSampler")
            .field("hurst", &self.hurst)
            .field("n_intervals", &self.grid.n_intervals())
            .field("route", &self.route)
            .finish()
    }
}

fn cholesky_in_place(a: &mut [f64], n: usize) -> std::result::Result<(), usize> {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > 0.0) {
            return Err(j);
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        let (head, tail) = a.split_at_mut((j + 1) * n);
        let row_j = &head[j * n..j * n + j];
        tail.par_chunks_mut(n).for_each(|row_i| {
            let s: f64 = row_i[..j].iter().zip(row_j).map(|(x, y)| x * y).sum();
            row_i[j] = (row_i[j] - s) / d;
        });
    }
    for i in 0..n {
        for k in i + 1..n {
            a[i * n + k] = 0.0;
        }
    }
    Ok(())
}

impl FbmSampler {
    pub fn new(hurst: Hurst, grid: &GridSpec, route: SamplerRoute) -> Result<Self> {
        let factor = match route {
            SamplerRoute::Cholesky => Self::cholesky_factor(hurst, grid)?,
            SamplerRoute::Fft => Self::fft_factor(hurst, grid)?,
        };
        Ok(Self {
            hurst,
            grid: Arc::new(grid.clone()),
            route,
            factor,
        })
    }

    fn cholesky_factor(hurst: Hurst, grid: &GridSpec) -> Result<Factor> {
        let cov = increment_covariance(hurst, grid);
        let n = cov.dim();
        let mut a = cov.matrix.clone();
        if let Err(first) = cholesky_in_place(&mut a, n) {
            let jitter = JITTER * cov.trace() / n as f64;
            let mut b = cov.matrix.clone();
            for i in 0..n {
                b[i * n + i] += jitter;
            }
            cholesky_in_place(&mut b, n).map_err(|second| {
                Error::Numerical(format!(
                    "Cholesky factorization of the {n}x{n} increment covariance failed for H={hurst} \
                     (pivot {first}, and pivot {second} after adding jitter {jitter:e})"
                ))
            })?;
            a = b;
        }
        Ok(Factor::Cholesky(a))
    }

    fn fft_factor(hurst: Hurst, grid: &GridSpec) -> Result<Factor> {
        let Some(step) = grid.step() else {
            return usage("the FFT sampler needs a uniform grid");
        };
        let n = grid.n_intervals();
        let m = 2 * n;
        let mut c: Vec<Complex<f64>> = (0..m)
            .map(|k| {
                let lag = if k <= n { k } else { m - k };
                Complex::new(fgn_autocovariance(hurst, lag), 0.0)
            })
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(m);
        fft.process(&mut c);
        let max = c.iter().fold(0.0f64, |a, z| a.max(z.re));
        let mut sqrt_eig = Vec::with_capacity(m);
        for (k, z) in c.iter().enumerate() {
            let lam = z.re;
            if lam < -EIG_CLAMP * max {
                return Err(Error::Numerical(format!(
                    "circulant embedding has negative eigenvalue {lam:e} at index {k} for H={hurst}"
                )));
            }
            sqrt_eig.push((lam.max(0.0) / m as f64).sqrt());
        }
        Ok(Factor::Fft {
            sqrt_eig,
            fft,
            scale: step.powf(hurst.value()),
        })
    }

    pub fn hurst(&self) -> Hurst {
        self.hurst
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn route(&self) -> SamplerRoute {
        self.route
    }

    /// Path `index` of the path stream under `seed`.
    pub fn path(&self, seed: u64, index: u64) -> FbmPath {
        self.path_on_stream(seed, PATH_STREAM, index)
    }

    pub fn path_on_stream(&self, seed: u64, stream: u64, index: u64) -> FbmPath {
        let mut rng = stream_rng(seed, stream, index);
        let n = self.grid.n_intervals();
        let increments: Vec<f64> = match &self.factor {
            Factor::Cholesky(l) => {
                let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
                (0..n)
                    .map(|i| {
                        l[i * n..i * n + i + 1]
                            .iter()
                            .zip(&z)
                            .map(|(a, b)| a * b)
                            .sum()
                    })
                    .collect()
            }
            Factor::Fft {
                sqrt_eig,
                fft,
                scale,
            } => {
                let mut w: Vec<Complex<f64>> = sqrt_eig
                    .iter()
                    .map(|s| {
                        let re: f64 = StandardNormal.sample(&mut rng);
                        let im: f64 = StandardNormal.sample(&mut rng);
                        Complex::new(s * re, s * im)
                    })
                    .collect();
                fft.process(&mut w);
                w[..n].iter().map(|z| z.re * scale).collect()
            }
        };
        let mut values = Vec::with_capacity(n + 1);
        values.push(0.0);
        let mut acc = 0.0;
        for d in increments {
            acc += d;
            values.push(acc);
        }
        FbmPath {
            hurst: self.hurst,
            grid: Arc::clone(&self.grid),
            values,
        }
    }

    /// Paths `0..count`, generated in parallel; identical for any worker count.
    pub fn batch(&self, count: usize, seed: u64) -> Result<FbmBatch> {
        if count == 0 {
            return domain("a batch needs at least one path");
        }
        let paths = (0..count as u64)
            .into_par_iter()
            .map(|i| self.path(seed, i))
            .collect();
        Ok(FbmBatch {
            hurst: self.hurst,
            grid: (*self.grid).clone(),
            seed,
            paths,
        })
    }
}

/// Sample `count` paths; see [`FbmSampler`].
pub fn sample_paths(
    h: Hurst,
    grid: &GridSpec,
    count: usize,
    seed: u64,
    route: SamplerRoute,
) -> Result<FbmBatch> {
    FbmSampler::new(h, grid, route)?.batch(count, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moments(x: &[f64]) -> (f64, f64) {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let v = x.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, v)
    }

    #[test]
    fn cholesky_reproduces_matrix() {
        let g = GridSpec::uniform(16).unwrap();
        let cov = increment_covariance(Hurst::new(0.8).unwrap(), &g);
        let mut l = cov.matrix.clone();
        cholesky_in_place(&mut l, 16).unwrap();
        for i in 0..16 {
            for j in 0..16 {
                let s: f64 = (0..16).map(|k| l[i * 16 + k] * l[j * 16 + k]).sum();
                assert!((s - cov.get(i, j)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn fft_route_needs_uniform_grid() {
        let g = GridSpec::from_times(vec![0.0, 0.3, 0.5, 1.0]).unwrap();
        let err = FbmSampler::new(Hurst::new(0.7).unwrap(), &g, SamplerRoute::Fft).unwrap_err();
        assert!(matches!(err, Error::Usage(_)));
        assert!(FbmSampler::new(Hurst::new(0.7).unwrap(), &g, SamplerRoute::Cholesky).is_ok());
    }

    #[test]
    fn terminal_variance_is_one() {
        for route in [SamplerRoute::Cholesky, SamplerRoute::Fft] {
            let g = GridSpec::uniform(32).unwrap();
            let s = FbmSampler::new(Hurst::new(0.3).unwrap(), &g, route).unwrap();
            let b1: Vec<f64> = (0..20_000).map(|i| s.path(5, i).terminal()).collect();
            let (_, v) = moments(&b1);
            // SE of a normal variance: sqrt(2/(M-1))
            assert!(
                (v - 1.0).abs() < 3.0 * (2.0f64 / 19_999.0).sqrt(),
                "{route:?}: {v}"
            );
        }
    }

    #[test]
    fn paths_start_at_zero_and_are_reproducible() {
        let g = GridSpec::uniform(64).unwrap();
        let s = FbmSampler::new(Hurst::new(0.6).unwrap(), &g, SamplerRoute::Fft).unwrap();
        let p = s.path(9, 3);
        assert_eq!(p.values()[0], 0.0);
        assert_eq!(p.values().len(), 65);
        assert_eq!(p, s.path(9, 3));
        assert_ne!(p, s.path(9, 4));
    }
}
