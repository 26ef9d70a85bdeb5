//! Ready-made configurations for every experiment the CLI knows by name.

use clap::ValueEnum;
use skorolim::fbm::Hurst;
use skorolim::integrals::{IntegrandSpec, MollifierKind, MultiParam};
use skorolim::kernels::AlphaRule;
use skorolim::montecarlo::{ConvolutionConfig, ExperimentConfig, ZWeight};
use skorolim::{Error, Result};

pub const DEFAULT_SEED: u64 = 2024;
pub const CONVOLUTION_SEED: u64 = 11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LimitPreset {
    /// `√n ∫ tⁿ B dB` at H = 1/2.
    PeccatiYor,
    /// `n^H ∫ tⁿ B^H δB^H`; needs `--hurst`.
    FbmMonomial,
    /// Iterated integrals of order `--order` at H = 1/2.
    Hermite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChaosIntegrand {
    /// `u ≡ 1`.
    One,
    /// `u = B` at the first argument.
    Path,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HypothesisPreset {
    /// `n^H tⁿ` against the conditions of its Hurst regime.
    Monomial,
    /// `φ_n ≡ 1` against (h2).
    Constant,
    /// One failing family per condition.
    Counterexamples,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConvolutionPreset {
    /// `u = B`, `t ∈ {0.25, 0.5, 0.75}`, `n ∈ {8, 32, 128}`.
    PathIntegrand,
    /// `u ≡ 1` on the same times and ladder.
    ConstantIntegrand,
}

fn hurst(h: f64) -> Result<Hurst> {
    Hurst::new(h).map_err(|e| Error::Config(e.to_string()))
}

fn base(id: String, h: Hurst) -> ExperimentConfig {
    ExperimentConfig {
        id,
        hurst: h,
        n_intervals: 1 << 11,
        kernel_scale: h.value(),
        ladder: vec![16, 64, 256],
        integrand: IntegrandSpec::PathLinear,
        order: 1,
        paths: 20_000,
        seed: DEFAULT_SEED,
        probes: vec![0.25, 0.5, 0.75, 1.0],
        lambdas: Vec::new(),
        z_weight: ZWeight::CosAt { t0: 0.5 },
        route: Default::default(),
        limit_l: None,
        bias_allowance: 2e-2,
        alpha_rule: AlphaRule::LogOverN,
    }
}

pub fn peccati_yor() -> ExperimentConfig {
    ExperimentConfig {
        lambdas: vec![0.5, 1.0, 2.0],
        ..base("peccati-yor".into(), Hurst::half())
    }
}

/// Rough paths get a finer grid, fewer paths and a wider bias allowance.
pub fn fbm_monomial(h: f64) -> Result<ExperimentConfig> {
    let hh = hurst(h)?;
    let mut cfg = base(format!("fbm-monomial-H{h}"), hh);
    if h > 0.5 {
        cfg.bias_allowance = 3e-2;
    } else if h < 0.5 {
        cfg.n_intervals = 1 << 12;
        cfg.paths = 10_000;
        cfg.bias_allowance = 5e-2;
    }
    Ok(cfg)
}

pub fn hermite(order: u32, u: ChaosIntegrand) -> ExperimentConfig {
    let (param, tag) = match u {
        ChaosIntegrand::One => (MultiParam::One, "one"),
        ChaosIntegrand::Path => (MultiParam::FirstArgPath, "path"),
    };
    ExperimentConfig {
        integrand: IntegrandSpec::Multi { param },
        order,
        ..base(format!("hermite-m{order}-{tag}"), Hurst::half())
    }
}

pub fn limit(
    preset: LimitPreset,
    h: Option<f64>,
    order: u32,
    u: ChaosIntegrand,
) -> Result<ExperimentConfig> {
    match preset {
        LimitPreset::PeccatiYor => Ok(peccati_yor()),
        LimitPreset::FbmMonomial => match h {
            Some(h) => fbm_monomial(h),
            None => Err(Error::Config(
                "the fbm-monomial preset needs --hurst".into(),
            )),
        },
        LimitPreset::Hermite => Ok(hermite(order, u)),
    }
}

pub fn convolution(preset: ConvolutionPreset, mollifier: MollifierKind) -> ConvolutionConfig {
    let (integrand, tag) = match preset {
        ConvolutionPreset::PathIntegrand => (IntegrandSpec::PathLinear, "path"),
        ConvolutionPreset::ConstantIntegrand => (IntegrandSpec::Constant { value: 1.0 }, "one"),
    };
    ConvolutionConfig {
        id: format!("convolution-{}-{tag}", mollifier.name()),
        n_intervals: 1 << 11,
        horizon: None,
        mollifier,
        times: vec![0.25, 0.5, 0.75],
        ladder: vec![8, 32, 128],
        integrand,
        paths: 20_000,
        seed: CONVOLUTION_SEED,
        bias_allowance: 2e-2,
    }
}
