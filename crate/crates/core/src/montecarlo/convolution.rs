use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::experiment::reference_csv;
use super::law::{sample_limit_law, LimitLaw, U1Descriptor};
use super::stats::{ks_two_sample, moments_with_se, pearson, KsResult, Moments};
use super::{sha256_hex, VerdictLine, MIN_VERDICT_PATHS};
use crate::error::{Error, Result};
use crate::fbm::{FbmSampler, Hurst, SamplerRoute};
use crate::grid::GridSpec;
use crate::integrals::{stochastic_convolution, IntegrandSpec, Mollifier, MollifierKind};
use crate::kernels::Verdict;

fn default_allowance() -> f64 {
    2e-2
}

/// `(u ∗_B ψ_n)_t` at several times along a ladder of `n`, on a Brownian
/// path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvolutionConfig {
    pub id: String,
    /// Cells per unit time.
    pub n_intervals: usize,
    /// Simulated horizon; chosen from the mollifier reach when absent.
    #[serde(default)]
    pub horizon: Option<f64>,
    pub mollifier: MollifierKind,
    pub times: Vec<f64>,
    pub ladder: Vec<u32>,
    pub integrand: IntegrandSpec,
    pub paths: usize,
    pub seed: u64,
    #[serde(default = "default_allowance")]
    pub bias_allowance: f64,
}

impl ConvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        let err = |m: &str| Err(Error::Config(m.to_string()));
        if self.ladder.is_empty()
            || self.ladder.windows(2).any(|w| w[1] <= w[0])
            || self.ladder[0] == 0
        {
            return err("the n ladder must be nonempty, positive and strictly increasing");
        }
        if self.times.is_empty() || self.times.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
            return err("convolution times must lie in (0, 1]");
        }
        if self.paths < 50 {
            return err("at least 50 paths are needed");
        }
        if matches!(
            self.integrand,
            IntegrandSpec::Multi { .. } | IntegrandSpec::Deterministic { .. }
        ) {
            return err("convolutions take a constant, path-linear or polynomial integrand");
        }
        if let Some(h) = self.horizon {
            if !(h >= 1.0) {
                return err("the horizon must be at least 1");
            }
        }
        Ok(())
    }

    /// 1 when every kernel stays inside `[0, 1]`, else 2.
    pub fn effective_horizon(&self) -> f64 {
        self.horizon.unwrap_or_else(|| {
            let reach = Mollifier::registered(self.mollifier).radius() / f64::from(self.ladder[0]);
            let t_max = self.times.iter().copied().fold(0.0, f64::max);
            if t_max + reach <= 1.0 {
                1.0
            } else {
                2.0
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvolutionPoint {
    pub n: u32,
    pub t: f64,
    pub moments: Moments,
    /// `E[u_t²]`.
    pub target_variance: f64,
    pub ks: KsResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvolutionRung {
    pub n: u32,
    pub points: Vec<ConvolutionPoint>,
    /// Correlations between the times, row-major.
    pub correlation: Vec<Vec<f64>>,
    pub max_off_diagonal: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvolutionSummary {
    pub schema: u32,
    pub config: ConvolutionConfig,
    pub horizon: f64,
    pub ladder: Vec<ConvolutionRung>,
    pub verdicts: Vec<VerdictLine>,
    pub digest: String,
}

impl ConvolutionSummary {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.verdict == Verdict::Supports)
    }

    pub fn verdict(&self, check: &str) -> Option<&VerdictLine> {
        self.verdicts.iter().find(|v| v.check == check)
    }
}

#[derive(Debug, Clone)]
pub struct ConvolutionResult {
    pub summary: ConvolutionSummary,
    /// `values[k][j][p]`: rung `k`, time `j`, path `p`.
    pub values: Vec<Vec<Vec<f64>>>,
    /// Reference draws of `u_t Z` per time.
    pub reference: Vec<Vec<f64>>,
}

impl ConvolutionResult {
    /// `experiment_id,path_id,n,t,value`.
    pub fn samples_csv(&self) -> Vec<u8> {
        samples_csv(&self.summary.config, &self.values)
    }

    pub fn reference_csv(&self) -> Vec<u8> {
        self.reference
            .iter()
            .flat_map(|r| reference_csv(&self.summary.config.id, r))
            .collect()
    }
}

fn samples_csv(cfg: &ConvolutionConfig, values: &[Vec<Vec<f64>>]) -> Vec<u8> {
    let mut s = String::from("experiment_id,path_id,n,t,value\n");
    for (k, per_t) in values.iter().enumerate() {
        for (j, v) in per_t.iter().enumerate() {
            for (p, x) in v.iter().enumerate() {
                let _ = writeln!(s, "{},{p},{},{},{x:e}", cfg.id, cfg.ladder[k], cfg.times[j]);
            }
        }
    }
    s.into_bytes()
}

pub fn run_convolution(cfg: &ConvolutionConfig) -> Result<ConvolutionResult> {
    cfg.validate()?;
    let horizon = cfg.effective_horizon();
    let cells = (cfg.n_intervals as f64 * horizon).round() as usize;
    let grid = GridSpec::uniform_on(cells, horizon)?;
    let sampler = FbmSampler::new(Hurst::half(), &grid, SamplerRoute::Fft)?;
    let psi = Mollifier::registered(cfg.mollifier);
    let (nl, nt) = (cfg.ladder.len(), cfg.times.len());

    let per_path: Vec<Vec<f64>> = (0..cfg.paths as u64)
        .into_par_iter()
        .map(|i| {
            let path = sampler.path(cfg.seed, i);
            let mut out = Vec::with_capacity(nl * nt);
            for &n in &cfg.ladder {
                for &t in &cfg.times {
                    out.push(stochastic_convolution(&path, &cfg.integrand, &psi, n, t)?);
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let values: Vec<Vec<Vec<f64>>> = (0..nl)
        .map(|k| {
            (0..nt)
                .map(|j| per_path.iter().map(|v| v[k * nt + j]).collect())
                .collect()
        })
        .collect();

    let u1 = U1Descriptor::from_integrand(&cfg.integrand)?;
    let laws: Vec<LimitLaw> = cfg
        .times
        .iter()
        .map(|t| Ok(LimitLaw::new(1.0, 1, u1.clone())?.with_path_sd(t.sqrt())))
        .collect::<Result<_>>()?;
    let reference: Vec<Vec<f64>> = laws
        .iter()
        .map(|law| sample_limit_law(law, cfg.paths, cfg.seed))
        .collect::<Result<_>>()?;

    let mut ladder = Vec::with_capacity(nl);
    for (k, &n) in cfg.ladder.iter().enumerate() {
        let mut points = Vec::with_capacity(nt);
        for (j, &t) in cfg.times.iter().enumerate() {
            points.push(ConvolutionPoint {
                n,
                t,
                moments: moments_with_se(&values[k][j])?,
                target_variance: laws[j].variance(),
                ks: ks_two_sample(&values[k][j], &reference[j])?,
            });
        }
        let mut correlation = vec![vec![1.0; nt]; nt];
        let mut max_off_diagonal = 0.0f64;
        for a in 0..nt {
            for b in (a + 1)..nt {
                let (r, _) = pearson(&values[k][a], &values[k][b])?;
                correlation[a][b] = r;
                correlation[b][a] = r;
                max_off_diagonal = max_off_diagonal.max(r.abs());
            }
        }
        ladder.push(ConvolutionRung {
            n,
            points,
            correlation,
            max_off_diagonal,
        });
    }

    let verdicts = convolution_verdicts(cfg, &ladder);
    let mut parts = vec![samples_csv(cfg, &values)];
    parts.extend(reference.iter().map(|r| reference_csv(&cfg.id, r)));
    let digest = sha256_hex(&parts);
    Ok(ConvolutionResult {
        summary: ConvolutionSummary {
            schema: 1,
            config: cfg.clone(),
            horizon,
            ladder,
            verdicts,
            digest,
        },
        values,
        reference,
    })
}

fn convolution_verdicts(cfg: &ConvolutionConfig, ladder: &[ConvolutionRung]) -> Vec<VerdictLine> {
    let last = ladder.last().expect("nonempty ladder");
    let mut out = Vec::new();
    for p in &last.points {
        let m = &p.moments;
        out.push(VerdictLine::from_bool(
            &format!("variance(t={})", p.t),
            m.var_within(p.target_variance, 3.0, cfg.bias_allowance),
            format!(
                "n={}: var {:.5} (SE {:.5}) vs {:.5}",
                last.n, m.var, m.se_var, p.target_variance
            ),
        ));
        out.push(VerdictLine::from_bool(
            &format!("ks(t={})", p.t),
            p.ks.p_value > 0.01,
            format!(
                "n={}: D {:.5}, p {:.4}",
                last.n, p.ks.statistic, p.ks.p_value
            ),
        ));
    }
    if cfg.times.len() > 1 {
        let trend: Vec<f64> = ladder.iter().map(|r| r.max_off_diagonal).collect();
        out.push(VerdictLine::from_bool(
            "cross-time-correlation",
            last.max_off_diagonal < 0.05,
            format!(
                "max |corr| along the ladder: {}",
                super::experiment::fmt_list(&trend)
            ),
        ));
    }
    if cfg.paths < MIN_VERDICT_PATHS {
        for v in &mut out {
            v.verdict = Verdict::Inconclusive;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ConvolutionConfig {
        ConvolutionConfig {
            id: "c".into(),
            n_intervals: 512,
            horizon: None,
            mollifier: MollifierKind::Triangular,
            times: vec![0.25, 0.75],
            ladder: vec![8, 32],
            integrand: IntegrandSpec::Constant { value: 1.0 },
            paths: 300,
            seed: 11,
            bias_allowance: 2e-2,
        }
    }

    #[test]
    fn horizon_follows_mollifier_reach() {
        let mut c = cfg();
        assert_eq!(c.effective_horizon(), 1.0);
        c.mollifier = MollifierKind::GaussianProfile;
        assert_eq!(c.effective_horizon(), 2.0);
        c.times = vec![1.5];
        assert!(c.validate().is_err());
    }

    #[test]
    fn constant_integrand_variance_targets_one() {
        let r = run_convolution(&cfg()).unwrap();
        let p = &r.summary.ladder[1].points[0];
        assert_eq!(p.target_variance, 1.0);
        assert!((p.moments.var - 1.0).abs() < 4.0 * p.moments.se_var);
        assert_eq!(r.values[1][1].len(), 300);
        assert_eq!(
            run_convolution(&cfg()).unwrap().summary.digest,
            r.summary.digest
        );
    }
}
