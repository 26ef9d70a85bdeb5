use proptest::prelude::*;
use skorolim::fbm::{FbmPath, FbmSampler, SamplerRoute};
use skorolim::integrals::{
    exact_wick_variance, iterated_ito_sum, ito_forward_sum, second_chaos_hermite,
    skorohod_wick_sum, stochastic_convolution, IntegrandSpec, Mollifier, MollifierKind, MultiParam,
    NormConvention,
};
use skorolim::kernels::KernelSequence;
use skorolim::montecarlo::moments_with_se;
use skorolim::{GridSpec, Hurst};

fn brownian(n: usize, seed: u64, idx: u64) -> FbmPath {
    let grid = GridSpec::uniform(n).unwrap();
    FbmSampler::new(Hurst::half(), &grid, SamplerRoute::Fft)
        .unwrap()
        .path(seed, idx)
}

fn brute_force(path: &FbmPath, phi: &[f64], m: u32, first_arg: bool) -> f64 {
    let b = path.values();
    let w: Vec<f64> = (0..phi.len()).map(|i| phi[i] * (b[i + 1] - b[i])).collect();
    let n = w.len();
    let weight = |i: usize| if first_arg { b[i] } else { 1.0 };
    let mut total = 0.0;
    match m {
        1 => {
            for (i, wi) in w.iter().enumerate() {
                total += weight(i) * wi;
            }
        }
        2 => {
            for i in 0..n {
                for j in i + 1..n {
                    total += weight(i) * w[i] * w[j];
                }
            }
        }
        3 => {
            for i in 0..n {
                for j in i + 1..n {
                    for k in j + 1..n {
                        total += weight(i) * w[i] * w[j] * w[k];
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    total
}

#[test]
fn ito_isometry_for_deterministic_integrand() {
    let n = 256;
    let grid = GridSpec::uniform(n).unwrap();
    let phi = KernelSequence::scaled_monomial(0.5)
        .cell_averages(16, &grid)
        .unwrap();
    let target: f64 = phi.iter().map(|p| p * p / n as f64).sum();
    let sampler = FbmSampler::new(Hurst::half(), &grid, SamplerRoute::Fft).unwrap();
    let x: Vec<f64> = (0..10_000)
        .map(|i| {
            ito_forward_sum(
                &sampler.path(5, i),
                &IntegrandSpec::Constant { value: 1.0 },
                &phi,
            )
            .unwrap()
            .value
        })
        .collect();
    let m = moments_with_se(&x).unwrap();
    assert!((m.var - target).abs() < 3.0 * m.se_var, "{m:?} vs {target}");
}

#[test]
fn wick_sums_are_centred_with_exact_variance() {
    let n = 128;
    let grid = GridSpec::uniform(n).unwrap();
    for h in [0.35, 0.75] {
        let hh = Hurst::new(h).unwrap();
        let phi = KernelSequence::scaled_monomial(h)
            .cell_averages(32, &grid)
            .unwrap();
        let sampler = FbmSampler::new(hh, &grid, SamplerRoute::Fft).unwrap();
        for u in [
            IntegrandSpec::Constant { value: 1.0 },
            IntegrandSpec::PathLinear,
        ] {
            let x: Vec<f64> = (0..10_000)
                .map(|i| {
                    skorohod_wick_sum(&sampler.path(17, i), &u, &phi)
                        .unwrap()
                        .value
                })
                .collect();
            let m = moments_with_se(&x).unwrap();
            assert!(m.mean.abs() < 3.0 * m.se_mean, "H={h} {u:?}: {m:?}");
            let v = exact_wick_variance(hh, &grid, &u, &phi).unwrap();
            assert!(
                (m.var - v).abs() < 3.0 * m.se_var,
                "H={h} {u:?}: {} vs {v}",
                m.var
            );
        }
    }
}

#[test]
fn convolution_variance_approaches_path_variance() {
    let psi = Mollifier::registered(MollifierKind::GaussianProfile);
    let grid = GridSpec::uniform_on(4096, 2.0).unwrap();
    let sampler = FbmSampler::new(Hurst::half(), &grid, SamplerRoute::Fft).unwrap();
    let t = 0.5;
    let errs: Vec<f64> = [8, 32, 128]
        .iter()
        .map(|&n| {
            let x: Vec<f64> = (0..4000)
                .map(|i| {
                    stochastic_convolution(
                        &sampler.path(3, i),
                        &IntegrandSpec::PathLinear,
                        &psi,
                        n,
                        t,
                    )
                    .unwrap()
                })
                .collect();
            (moments_with_se(&x).unwrap().var - t).abs()
        })
        .collect();
    assert!(errs[0] > errs[2], "{errs:?}");
    assert!(errs[2] < 0.05, "{errs:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn iterated_sum_matches_nested_loops(
        n in 2usize..=64,
        m in 1u32..=3,
        first_arg in any::<bool>(),
        seed in any::<u64>(),
        scale in 0.1f64..3.0,
    ) {
        let path = brownian(n, seed, 0);
        let phi: Vec<f64> = (0..n).map(|i| scale * (1.0 + (i as f64).sin())).collect();
        let u = if first_arg {
            IntegrandSpec::Multi { param: MultiParam::FirstArgPath }
        } else {
            IntegrandSpec::Multi { param: MultiParam::One }
        };
        let fast = iterated_ito_sum(&path, &u, &phi, m).unwrap().value;
        let slow = brute_force(&path, &phi, m, first_arg);
        let scale_ref: f64 = phi.iter().map(|p| p.abs()).sum::<f64>().powi(m as i32).max(1.0);
        prop_assert!((fast - slow).abs() <= 1e-12 * scale_ref.max(slow.abs()), "{fast} vs {slow}");
    }

    #[test]
    fn second_chaos_identity_is_pathwise(n in 2usize..=128, seed in any::<u64>()) {
        let path = brownian(n, seed, 1);
        let phi: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 / n as f64).collect();
        let iter = iterated_ito_sum(&path, &IntegrandSpec::Multi { param: MultiParam::One }, &phi, 2)
            .unwrap()
            .value;
        let herm = second_chaos_hermite(&path, &phi, 0.0, NormConvention::QuadraticVariation).unwrap();
        prop_assert!((iter - herm).abs() < 1e-12 * (1.0 + herm.abs()));
    }

    #[test]
    fn wick_components_add_up(h in 0.05f64..0.95, n in 2usize..=64, seed in any::<u64>(), poly in prop::collection::vec(-2.0f64..2.0, 1..4)) {
        let hh = Hurst::new(h).unwrap();
        let grid = GridSpec::uniform(n).unwrap();
        let path = FbmSampler::new(hh, &grid, SamplerRoute::Fft).unwrap().path(seed, 0);
        let phi: Vec<f64> = (0..n).map(|i| (i as f64 / n as f64).powi(3)).collect();
        let s = skorohod_wick_sum(&path, &IntegrandSpec::polynomial(poly), &phi).unwrap();
        let (f, t) = (s.forward_component.unwrap(), s.trace_component.unwrap());
        prop_assert!((f + t - s.value).abs() <= 1e-14 * s.value.abs().max(f.abs()).max(t.abs()).max(1e-300));
    }

    #[test]
    fn wick_sum_is_linear_in_phi(seed in any::<u64>(), c in -3.0f64..3.0) {
        let hh = Hurst::new(0.6).unwrap();
        let grid = GridSpec::uniform(32).unwrap();
        let path = FbmSampler::new(hh, &grid, SamplerRoute::Fft).unwrap().path(seed, 0);
        let phi: Vec<f64> = (0..32).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let scaled: Vec<f64> = phi.iter().map(|p| c * p).collect();
        let a = skorohod_wick_sum(&path, &IntegrandSpec::PathLinear, &phi).unwrap().value;
        let b = skorohod_wick_sum(&path, &IntegrandSpec::PathLinear, &scaled).unwrap().value;
        prop_assert!((c * a - b).abs() < 1e-12 * (1.0 + b.abs()));
    }
}
