use skorolim::fbm::{FbmSampler, SamplerRoute};
use skorolim::integrals::{
    iterated_step_integral, second_chaos_hermite, skorohod_wick_sum, stochastic_convolution,
    IntegrandSpec, Mollifier, MollifierKind, MultiParam, NormConvention,
};
use skorolim::kernels::{AlphaRule, KernelSequence};
use skorolim::montecarlo::{
    moments_with_se, run_convolution, run_experiment, sample_limit_law, stable_char_functional,
    ConvolutionConfig, ExperimentConfig, LimitLaw, U1Descriptor, ZWeight,
};
use skorolim::{GridSpec, Hurst};

fn small_experiment() -> ExperimentConfig {
    ExperimentConfig {
        id: "golden".into(),
        hurst: Hurst::half(),
        n_intervals: 1 << 9,
        kernel_scale: 0.5,
        ladder: vec![8, 32],
        integrand: IntegrandSpec::PathLinear,
        order: 1,
        paths: 1000,
        seed: 7,
        probes: vec![0.5, 1.0],
        lambdas: vec![1.0],
        z_weight: ZWeight::CosAt { t0: 0.5 },
        route: SamplerRoute::Fft,
        limit_l: None,
        bias_allowance: 2e-2,
        alpha_rule: AlphaRule::LogOverN,
    }
}

fn small_convolution() -> ConvolutionConfig {
    ConvolutionConfig {
        id: "golden-conv".into(),
        n_intervals: 1 << 9,
        horizon: None,
        mollifier: MollifierKind::GaussianProfile,
        times: vec![0.5],
        ladder: vec![8, 32],
        integrand: IntegrandSpec::PathLinear,
        paths: 1000,
        seed: 11,
        bias_allowance: 2e-2,
    }
}

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
}

fn close(got: f64, want: f64) {
    assert!(
        (got - want).abs() <= 1e-12 * want.abs().max(1.0),
        "{got:e} vs {want:e}"
    );
}

#[test]
fn golden_pathwise_values() {
    let grid = GridSpec::uniform(1 << 10).unwrap();
    let h = Hurst::new(0.75).unwrap();
    let phi = KernelSequence::scaled_monomial(0.75)
        .cell_averages(64, &grid)
        .unwrap();
    let path = FbmSampler::new(h, &grid, SamplerRoute::Fft)
        .unwrap()
        .path(42, 0);
    let wick = skorohod_wick_sum(&path, &IntegrandSpec::PathLinear, &phi)
        .unwrap()
        .value;

    let bm = FbmSampler::new(Hurst::half(), &grid, SamplerRoute::Fft)
        .unwrap()
        .path(42, 0);
    let phi32 = KernelSequence::scaled_monomial(0.5)
        .cell_averages(32, &grid)
        .unwrap();
    let third = iterated_step_integral(
        &bm,
        &IntegrandSpec::Multi {
            param: MultiParam::One,
        },
        &phi32,
        3,
    )
    .unwrap()
    .value;
    let phi64 = KernelSequence::scaled_monomial(0.5)
        .cell_averages(64, &grid)
        .unwrap();
    let chaos = second_chaos_hermite(&bm, &phi64, 0.0, NormConvention::QuadraticVariation).unwrap();

    let wide = GridSpec::uniform_on(1 << 10, 2.0).unwrap();
    let bw = FbmSampler::new(Hurst::half(), &wide, SamplerRoute::Fft)
        .unwrap()
        .path(42, 0);
    let psi = Mollifier::registered(MollifierKind::GaussianProfile);
    let conv = stochastic_convolution(&bw, &IntegrandSpec::PathLinear, &psi, 64, 0.5).unwrap();

    // direct recomputation from the path values
    let t = grid.times();
    let b = path.values();
    let r = |x: f64, y: f64| skorolim::fbm::covariance_rh(h, x, y).unwrap();
    let direct: f64 = (0..phi.len())
        .map(|i| phi[i] * (b[i] * (b[i + 1] - b[i]) - (r(t[i], t[i + 1]) - r(t[i], t[i]))))
        .sum();
    close(wick, direct);
    let w = bm.values();
    let (s1, q) = (0..phi64.len()).fold((0.0, 0.0), |(s1, q), i| {
        let d = phi64[i] * (w[i + 1] - w[i]);
        (s1 + d, q + d * d)
    });
    close(chaos, 0.5 * (s1 * s1 - q));

    close(wick, -1.1259586198970326e0);
    close(third, 1.1511951764399501e-1);
    close(chaos, 2.426150199576559e-1);
    close(conv, 8.342460500919151e-1);
}

#[test]
fn golden_digests_are_worker_independent() {
    let cfg = small_experiment();
    let one = pool(1).install(|| run_experiment(&cfg).unwrap().summary.digest);
    let four = pool(4).install(|| run_experiment(&cfg).unwrap().summary.digest);
    assert_eq!(one, four);
    let conv = small_convolution();
    let c1 = pool(1).install(|| run_convolution(&conv).unwrap().summary.digest);
    let c3 = pool(3).install(|| run_convolution(&conv).unwrap().summary.digest);
    assert_eq!(c1, c3);
    assert_eq!(
        one,
        "40433846b51c55ea759f30481ad5e59c02e25a30914313cf1d2a012174a5201b"
    );
    assert_eq!(
        c1,
        "3f797f30a9d9dd681dcbe02100c7080b0fb7d3570906c6d7ab3bc69f7dc0820a"
    );
    let mut other = cfg.clone();
    other.seed = 8;
    assert_ne!(run_experiment(&other).unwrap().summary.digest, one);
}

#[test]
fn reference_law_matches_normalization() {
    for m in 1..=3 {
        for u1 in [
            U1Descriptor::Deterministic { value: 1.0 },
            U1Descriptor::TerminalPath,
        ] {
            let law = LimitLaw::new(0.8, m, u1.clone()).unwrap();
            let x = sample_limit_law(&law, 50_000, 1).unwrap();
            let mo = moments_with_se(&x).unwrap();
            assert!(
                (mo.var - law.variance()).abs() < 3.0 * mo.se_var,
                "m={m} {u1:?}: {} vs {}",
                mo.var,
                law.variance()
            );
            assert!(mo.mean.abs() < 3.0 * mo.se_mean);
        }
    }
}

#[test]
fn unit_weight_reduces_to_plain_char_function() {
    let law = LimitLaw::new(0.5, 1, U1Descriptor::Deterministic { value: 1.0 }).unwrap();
    let f = sample_limit_law(&law, 20_000, 4).unwrap();
    let ones = vec![1.0; f.len()];
    for lambda in [0.5, 1.0, 2.0] {
        let c = stable_char_functional(&f, &ones, &ones, lambda, &law).unwrap();
        close(c.closed_form, (-lambda * lambda * 0.5 / 2.0).exp());
        assert!(c.within_threshold, "{c:?}");
    }
}

#[test]
fn coupling_gap_contracts_along_ladder() {
    let cfg = ExperimentConfig {
        ladder: vec![8, 32, 128],
        paths: 2000,
        ..small_experiment()
    };
    let r = run_experiment(&cfg).unwrap();
    let gaps: Vec<f64> = r
        .summary
        .ladder
        .iter()
        .map(|p| p.coupling_gap.as_ref().unwrap().mean)
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
}
