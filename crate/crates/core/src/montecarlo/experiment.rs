use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::charfn::{stable_char_functional, CharFnResult, ZWeight};
use super::law::{sample_limit_law, LimitLaw, U1Descriptor};
use super::stats::{
    ks_two_sample, moments_with_se, probe_correlations, Correlation, KsResult, Moments,
};
use super::{sha256_hex, VerdictLine, MIN_VERDICT_PATHS};
use crate::error::{Error, Result};
use crate::fbm::{FbmSampler, Hurst, SamplerRoute};
use crate::grid::GridSpec;
use crate::integrals::{
    exact_wick_variance, iterated_step_integral, second_chaos_hermite, skorohod_wick_sum,
    skorohod_wick_sum_frozen, write_samples_csv, Freeze, IntegralSample, IntegrandSpec, MultiParam,
    NormConvention, MAX_ITERATED_ORDER,
};
use crate::kernels::{monomial_limit, AlphaRule, KernelSequence, Verdict};

fn one() -> u32 {
    1
}

fn default_allowance() -> f64 {
    2e-2
}

/// An experiment `F_n = ∫φ_n u dB` (or its `m`-fold iterated version) over a
/// ladder of `n`, with `φ_n(t) = n^s tⁿ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub id: String,
    #[serde(rename = "H")]
    pub hurst: Hurst,
    pub n_intervals: usize,
    /// Exponent `s` in `φ_n(t) = n^s tⁿ`.
    pub kernel_scale: f64,
    pub ladder: Vec<u32>,
    pub integrand: IntegrandSpec,
    #[serde(default = "one")]
    pub order: u32,
    pub paths: usize,
    pub seed: u64,
    #[serde(default)]
    pub probes: Vec<f64>,
    #[serde(default)]
    pub lambdas: Vec<f64>,
    #[serde(default)]
    pub z_weight: ZWeight,
    #[serde(default)]
    pub route: SamplerRoute,
    /// Limit constant `L`; defaults to `HΓ(2H)` when `s = H`.
    #[serde(default, rename = "L")]
    pub limit_l: Option<f64>,
    #[serde(default = "default_allowance")]
    pub bias_allowance: f64,
    #[serde(default)]
    pub alpha_rule: AlphaRule,
}

fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

impl ExperimentConfig {
    /// Check the regime restrictions before any sampling.
    pub fn validate(&self) -> Result<()> {
        let h = self.hurst.value();
        if self.ladder.is_empty()
            || self.ladder.windows(2).any(|w| w[1] <= w[0])
            || self.ladder[0] == 0
        {
            return config_err("the n ladder must be nonempty, positive and strictly increasing");
        }
        if self.paths < 50 {
            return config_err(format!("at least 50 paths are needed, got {}", self.paths));
        }
        if self.n_intervals < 2 {
            return config_err("the grid needs at least 2 intervals");
        }
        if self.probes.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return config_err("probe times must lie in [0, 1]");
        }
        if !(self.bias_allowance >= 0.0) {
            return config_err("bias_allowance must be nonnegative");
        }
        match self.order {
            0 => return config_err("order must be at least 1"),
            1 => {
                if matches!(self.integrand, IntegrandSpec::Multi { .. }) {
                    return config_err("multi-parameter integrands need order ≥ 2");
                }
                if let IntegrandSpec::Deterministic { node_values } = &self.integrand {
                    if node_values.len() != self.n_intervals + 1 {
                        return config_err(
                            "deterministic integrand must give one value per grid node",
                        );
                    }
                }
                if self.integrand.is_path_dependent() && h <= 0.25 {
                    return config_err(format!(
                        "H = {h} is outside the supported regime: path-dependent integrands require H > 1/4"
                    ));
                }
            }
            m if m > MAX_ITERATED_ORDER => {
                return config_err(format!(
                    "iterated integrals are supported up to order {MAX_ITERATED_ORDER}"
                ))
            }
            _ => {
                if !self.hurst.is_half() {
                    return config_err("iterated integrals are defined for H = 1/2 only");
                }
                let ok = matches!(self.integrand, IntegrandSpec::Multi { .. })
                    || self.integrand == IntegrandSpec::Constant { value: 1.0 };
                if !ok {
                    return config_err("iterated integrals take u ≡ 1 or u = B(t₁)");
                }
            }
        }
        self.limit_constant().map(|_| ())
    }

    pub fn limit_constant(&self) -> Result<f64> {
        match self.limit_l {
            Some(l) if l > 0.0 && l.is_finite() => Ok(l),
            Some(l) => config_err(format!("L must be positive, got {l}")),
            None if (self.kernel_scale - self.hurst.value()).abs() < 1e-12 => {
                Ok(monomial_limit(self.hurst))
            }
            None => config_err("L must be given unless the kernel scale equals H"),
        }
    }

    pub fn limit_law(&self) -> Result<LimitLaw> {
        LimitLaw::new(
            self.limit_constant()?,
            self.order,
            U1Descriptor::from_integrand(&self.integrand)?,
        )
    }
}

/// Statistics at one rung of the ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderPoint {
    pub n: u32,
    pub alpha: f64,
    pub moments: Moments,
    /// Variance of the discrete sum computed from the fBm covariance, when
    /// available.
    pub discrete_variance: Option<f64>,
    /// Moments of `(F_n - G_n)²`.
    pub coupling_gap: Option<Moments>,
    pub ks: KsResult,
    pub correlations: Vec<Correlation>,
    pub char_functional: Vec<CharFnResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub schema: u32,
    pub config: ExperimentConfig,
    pub law: LimitLaw,
    pub target_variance: f64,
    pub ladder: Vec<LadderPoint>,
    pub reference: Moments,
    pub verdicts: Vec<VerdictLine>,
    pub digest: String,
}

impl ExperimentSummary {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.verdict == Verdict::Supports)
    }

    pub fn verdict(&self, check: &str) -> Option<&VerdictLine> {
        self.verdicts.iter().find(|v| v.check == check)
    }

    pub fn last(&self) -> &LadderPoint {
        self.ladder.last().expect("nonempty ladder")
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub summary: ExperimentSummary,
    /// `F_n` for every path, grouped by rung.
    pub samples: Vec<Vec<IntegralSample>>,
    /// `G_n` per rung, when defined.
    pub coupling: Vec<Option<Vec<f64>>>,
    pub reference: Vec<f64>,
}

impl ExperimentResult {
    /// `experiment_id,path_id,n,value,forward_component,trace_component`.
    pub fn samples_csv(&self) -> Vec<u8> {
        samples_csv(&self.summary.config.id, &self.samples)
    }

    /// `experiment_id,path_id,n,g_value`.
    pub fn coupling_csv(&self) -> Vec<u8> {
        coupling_csv(
            &self.summary.config.id,
            &self.coupling,
            &self.summary.config.ladder,
        )
    }

    /// `experiment_id,index,reference_value`.
    pub fn reference_csv(&self) -> Vec<u8> {
        reference_csv(&self.summary.config.id, &self.reference)
    }
}

fn samples_csv(id: &str, samples: &[Vec<IntegralSample>]) -> Vec<u8> {
    let mut out = Vec::new();
    let flat: Vec<IntegralSample> = samples.iter().flatten().copied().collect();
    write_samples_csv(id, &flat, &mut out).expect("writing to memory");
    out
}

fn coupling_csv(id: &str, coupling: &[Option<Vec<f64>>], ladder: &[u32]) -> Vec<u8> {
    let mut s = String::from("experiment_id,path_id,n,g_value\n");
    for (g, n) in coupling.iter().zip(ladder) {
        for (k, v) in g.iter().flatten().enumerate() {
            let _ = writeln!(s, "{id},{k},{n},{v:e}");
        }
    }
    s.into_bytes()
}

pub(crate) fn reference_csv(id: &str, reference: &[f64]) -> Vec<u8> {
    let mut s = String::from("experiment_id,index,reference_value\n");
    for (k, v) in reference.iter().enumerate() {
        let _ = writeln!(s, "{id},{k},{v:e}");
    }
    s.into_bytes()
}

struct PathRecord {
    f: Vec<IntegralSample>,
    g: Vec<Option<f64>>,
    probes: Vec<f64>,
    z: f64,
    u1: f64,
}

struct Rung {
    n: u32,
    alpha: f64,
    phi: Vec<f64>,
    freeze: Option<Freeze>,
}

fn coupled_value(
    cfg: &ExperimentConfig,
    path: &crate::fbm::FbmPath,
    rung: &Rung,
) -> Result<Option<f64>> {
    let Some(freeze) = rung.freeze else {
        return Ok(None);
    };
    match cfg.order {
        1 => Ok(Some(
            skorohod_wick_sum_frozen(path, &cfg.integrand, &rung.phi, freeze)?.value,
        )),
        2 => {
            let u = match cfg.integrand {
                IntegrandSpec::Multi {
                    param: MultiParam::FirstArgPath,
                } => path.values()[freeze.node],
                _ => 1.0,
            };
            let window = path.grid().times()[freeze.window];
            Ok(Some(
                u * second_chaos_hermite(path, &rung.phi, window, NormConvention::Deterministic)?,
            ))
        }
        _ => Ok(None),
    }
}

/// Sample paths, evaluate `F_n` (and `G_n` where defined) on every rung,
/// draw the reference law from independent streams and compute all
/// statistics and verdicts.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let h = cfg.hurst;
    let grid = GridSpec::uniform(cfg.n_intervals)?;
    let sampler = FbmSampler::new(h, &grid, cfg.route)?;
    let family = KernelSequence::scaled_monomial(cfg.kernel_scale).with_alpha_rule(cfg.alpha_rule);
    let rungs: Vec<Rung> = cfg
        .ladder
        .iter()
        .map(|&n| {
            let alpha = family.alpha(n);
            let freeze = match cfg.order {
                1 if h.is_half() => Some(Freeze::at(&grid, alpha, alpha)),
                1 => Some(Freeze::at(&grid, 1.0, 0.0)),
                2 => Some(Freeze::at(&grid, alpha, alpha)),
                _ => None,
            };
            Ok(Rung {
                n,
                alpha,
                phi: family.cell_averages(n, &grid)?,
                freeze,
            })
        })
        .collect::<Result<_>>()?;

    let records: Vec<PathRecord> = (0..cfg.paths as u64)
        .into_par_iter()
        .map(|i| {
            let path = sampler.path(cfg.seed, i);
            let mut f = Vec::with_capacity(rungs.len());
            let mut g = Vec::with_capacity(rungs.len());
            for r in &rungs {
                let s = if cfg.order == 1 {
                    skorohod_wick_sum(&path, &cfg.integrand, &r.phi)?
                } else {
                    iterated_step_integral(&path, &cfg.integrand, &r.phi, cfg.order)?
                };
                f.push(s.tagged(i, r.n));
                g.push(coupled_value(cfg, &path, r)?);
            }
            Ok(PathRecord {
                f,
                g,
                probes: cfg.probes.iter().map(|&t| path.at(t)).collect(),
                z: cfg.z_weight.eval(&path),
                u1: cfg.integrand.terminal_value(path.terminal()),
            })
        })
        .collect::<Result<_>>()?;

    let law = cfg.limit_law()?;
    let reference = sample_limit_law(&law, cfg.paths, cfg.seed)?;
    let reference_moments = moments_with_se(&reference)?;
    let probe_values: Vec<(f64, Vec<f64>)> = cfg
        .probes
        .iter()
        .enumerate()
        .map(|(j, &t)| (t, records.iter().map(|r| r.probes[j]).collect()))
        .collect();
    let z: Vec<f64> = records.iter().map(|r| r.z).collect();
    let u1: Vec<f64> = records.iter().map(|r| r.u1).collect();

    let mut ladder = Vec::with_capacity(rungs.len());
    let mut samples = Vec::with_capacity(rungs.len());
    let mut coupling = Vec::with_capacity(rungs.len());
    for (k, r) in rungs.iter().enumerate() {
        let f_samples: Vec<IntegralSample> = records.iter().map(|p| p.f[k]).collect();
        let f: Vec<f64> = f_samples.iter().map(|s| s.value).collect();
        let g: Option<Vec<f64>> = records.iter().map(|p| p.g[k]).collect();
        let coupling_gap = match &g {
            Some(g) => {
                let d: Vec<f64> = f.iter().zip(g).map(|(a, b)| (a - b) * (a - b)).collect();
                Some(moments_with_se(&d)?)
            }
            None => None,
        };
        let discrete_variance = match (&cfg.integrand, cfg.order) {
            (
                IntegrandSpec::PathLinear
                | IntegrandSpec::Constant { .. }
                | IntegrandSpec::Deterministic { .. },
                1,
            ) => Some(exact_wick_variance(h, &grid, &cfg.integrand, &r.phi)?),
            _ => None,
        };
        let char_functional = if cfg.order == 1 {
            cfg.lambdas
                .iter()
                .map(|&l| stable_char_functional(&f, &z, &u1, l, &law))
                .collect::<Result<_>>()?
        } else {
            Vec::new()
        };
        ladder.push(LadderPoint {
            n: r.n,
            alpha: r.alpha,
            moments: moments_with_se(&f)?,
            discrete_variance,
            coupling_gap,
            ks: ks_two_sample(&f, &reference)?,
            correlations: probe_correlations(&f, &probe_values)?,
            char_functional,
        });
        samples.push(f_samples);
        coupling.push(g);
    }

    let target_variance = law.variance();
    let verdicts = experiment_verdicts(cfg, &ladder, target_variance);
    let digest = sha256_hex(&[
        samples_csv(&cfg.id, &samples),
        coupling_csv(&cfg.id, &coupling, &cfg.ladder),
        reference_csv(&cfg.id, &reference),
    ]);
    Ok(ExperimentResult {
        summary: ExperimentSummary {
            schema: 1,
            config: cfg.clone(),
            law,
            target_variance,
            ladder,
            reference: reference_moments,
            verdicts,
            digest,
        },
        samples,
        coupling,
        reference,
    })
}

fn experiment_verdicts(
    cfg: &ExperimentConfig,
    ladder: &[LadderPoint],
    target: f64,
) -> Vec<VerdictLine> {
    let last = ladder.last().expect("nonempty ladder");
    let mut out = Vec::new();
    let m = &last.moments;
    out.push(VerdictLine::from_bool(
        "mean-zero",
        m.mean_within(0.0, 3.0),
        format!("n={}: mean {:.5} (SE {:.5})", last.n, m.mean, m.se_mean),
    ));
    out.push(VerdictLine::from_bool(
        "variance",
        m.var_within(target, 3.0, cfg.bias_allowance),
        format!(
            "n={}: var {:.5} (SE {:.5}) vs limit {:.5}, allowance {}",
            last.n, m.var, m.se_var, target, cfg.bias_allowance
        ),
    ));
    out.push(VerdictLine::from_bool(
        "ks",
        last.ks.p_value > 0.01,
        format!(
            "n={}: D {:.5}, p {:.4}",
            last.n, last.ks.statistic, last.ks.p_value
        ),
    ));
    if !last.correlations.is_empty() {
        let worst = last
            .correlations
            .iter()
            .max_by(|a, b| a.r.abs().total_cmp(&b.r.abs()))
            .expect("nonempty");
        let ok = last
            .correlations
            .iter()
            .all(|c| c.r.abs() < 0.05f64.max(3.0 * c.se));
        out.push(VerdictLine::from_bool(
            "probe-correlations",
            ok,
            format!(
                "n={}: max |corr| {:.4} at t={}",
                last.n,
                worst.r.abs(),
                worst.probe
            ),
        ));
    }
    let gaps: Vec<f64> = ladder
        .iter()
        .filter_map(|p| p.coupling_gap.map(|g| g.mean))
        .collect();
    if gaps.len() == ladder.len() && gaps.len() >= 2 {
        out.push(VerdictLine::from_bool(
            "coupling-contraction",
            gaps.windows(2).all(|w| w[1] < w[0]),
            format!("E[(F_n - G_n)²]: {}", fmt_list(&gaps)),
        ));
    }
    for c in &last.char_functional {
        out.push(VerdictLine::from_bool(
            &format!("char-functional(lambda={})", c.lambda),
            c.within_threshold,
            format!(
                "distance {:.5} vs 4·SE {:.5}",
                c.distance,
                4.0 * c.combined_se
            ),
        ));
    }
    if cfg.paths < MIN_VERDICT_PATHS {
        for v in &mut out {
            v.verdict = Verdict::Inconclusive;
            v.detail
                .push_str(&format!(" [M={} below {MIN_VERDICT_PATHS}]", cfg.paths));
        }
    }
    out
}

pub(crate) fn fmt_list(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:.5}"))
        .collect::<Vec<_>>()
        .join(", ")
}
