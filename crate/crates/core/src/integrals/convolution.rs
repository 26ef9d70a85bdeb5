use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use super::IntegrandSpec;
use crate::error::{domain, usage, Result};
use crate::fbm::FbmPath;
use crate::quad::{apply_rule, gauss_legendre, integrate, QuadOptions};

const NORM_TOL: f64 = 1e-6;

/// Registered mollifier profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MollifierKind {
    /// `√(3/2) (1 - |x|)₊`.
    Triangular,
    /// `(2/π)^{1/4} e^{-x²}`.
    GaussianProfile,
}

impl MollifierKind {
    pub const ALL: [MollifierKind; 2] = [MollifierKind::Triangular, MollifierKind::GaussianProfile];

    pub fn name(self) -> &'static str {
        match self {
            Self::Triangular => "triangular",
            Self::GaussianProfile => "gaussian-profile",
        }
    }
}

type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A profile `ψ` with `∫ψ² = 1`, supported (up to negligible mass) in
/// `[-radius, radius]` and smooth away from `kinks`.
#[derive(Clone)]
pub struct Mollifier {
    name: String,
    profile: Profile,
    radius: f64,
    kinks: Vec<f64>,
}

impl fmt::Debug for Mollifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Mollifier")
            .field("name", &self.name)
            .field("radius", &self.radius)
            .finish()
    }
}

impl Mollifier {
    /// Validate `∫ψ² = 1` numerically.
    pub fn from_fn(
        name: &str,
        radius: f64,
        kinks: &[f64],
        profile: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return domain(format!("mollifier radius must be positive, got {radius}"));
        }
        let m = Self {
            name: name.to_string(),
            profile: Arc::new(profile),
            radius,
            kinks: kinks.iter().copied().filter(|k| k.abs() < radius).collect(),
        };
        let mass = m.square_mass()?;
        if (mass - 1.0).abs() > NORM_TOL {
            return usage(format!(
                "mollifier `{name}` has ∫ψ² = {mass:.9}, expected 1"
            ));
        }
        Ok(m)
    }

    pub fn registered(kind: MollifierKind) -> Self {
        static CACHE: OnceLock<[Mollifier; 2]> = OnceLock::new();
        let all = CACHE.get_or_init(|| {
            let tri = Mollifier::from_fn(MollifierKind::Triangular.name(), 1.0, &[0.0], |x| {
                1.5f64.sqrt() * (1.0 - x.abs()).max(0.0)
            })
            .expect("triangular profile is normalized");
            let c = (2.0 / std::f64::consts::PI).powf(0.25);
            let gauss =
                Mollifier::from_fn(MollifierKind::GaussianProfile.name(), 6.5, &[], move |x| {
                    c * (-x * x).exp()
                })
                .expect("gaussian profile is normalized");
            [tri, gauss]
        });
        match kind {
            MollifierKind::Triangular => all[0].clone(),
            MollifierKind::GaussianProfile => all[1].clone(),
        }
    }

    /// Look up a registered profile by name.
    pub fn by_name(name: &str) -> Result<Self> {
        MollifierKind::ALL
            .iter()
            .find(|k| k.name() == name)
            .map(|&k| Self::registered(k))
            .map_or_else(
                || {
                    usage(format!(
                        "unknown mollifier `{name}` (registered: triangular, gaussian-profile)"
                    ))
                },
                Ok,
            )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x.abs() > self.radius {
            0.0
        } else {
            (self.profile)(x)
        }
    }

    /// `ψ_n(x) = √n ψ(nx)`.
    pub fn scaled(&self, n: u32, x: f64) -> f64 {
        let nf = f64::from(n);
        nf.sqrt() * self.eval(nf * x)
    }

    fn breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        let mut pts = vec![a];
        pts.extend(self.kinks.iter().copied().filter(|&k| k > a && k < b));
        pts.push(b);
        pts
    }

    fn square_mass(&self) -> Result<f64> {
        let opts = QuadOptions::default();
        let pts = self.breakpoints(-self.radius, self.radius);
        pts.windows(2)
            .map(|w| integrate(|x| (self.profile)(x).powi(2), w[0], w[1], opts))
            .sum()
    }

    /// `∫_a^b ψ(z) dz`, piecewise Gauss–Legendre between kinks.
    fn mass(&self, a: f64, b: f64) -> f64 {
        static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
        let rule = RULE.get_or_init(|| gauss_legendre(8));
        let (a, b) = (a.max(-self.radius), b.min(self.radius));
        if a >= b {
            return 0.0;
        }
        self.breakpoints(a, b)
            .windows(2)
            .map(|w| apply_rule(rule, |x| (self.profile)(x), w[0], w[1]))
            .sum()
    }
}

/// `(u ∗_B ψ_n)_t = Σ_i u(t_i) ψ̄_{n,i} ΔB_i`, where `ψ̄_{n,i}` is the average of
/// `s ↦ ψ_n(t - s)` over cell `i`. The integral is truncated to the horizon of
/// the path.
pub fn stochastic_convolution(
    path: &FbmPath,
    u: &IntegrandSpec,
    psi: &Mollifier,
    n: u32,
    t: f64,
) -> Result<f64> {
    if !path.hurst().is_half() {
        return usage(format!(
            "stochastic convolutions need H = 1/2, got H = {}",
            path.hurst()
        ));
    }
    if n == 0 {
        return domain("the mollifier scale n must be positive");
    }
    let grid = path.grid();
    if !(0.0..=grid.horizon()).contains(&t) {
        return domain(format!(
            "t={t} lies outside the path horizon {}",
            grid.horizon()
        ));
    }
    u.check_single(grid.n_points())?;
    let nf = f64::from(n);
    let reach = psi.radius() / nf;
    let times = grid.times();
    let b = path.values();
    let lo = grid.node_at_or_after(t - reach).saturating_sub(1);
    let hi = grid.node_at_or_after(t + reach).min(grid.n_intervals());
    let mut acc = 0.0;
    for i in lo..hi {
        let (a, c) = (times[i], times[i + 1]);
        // ∫_a^c √n ψ(n(t-s)) ds = n^{-1/2} ∫_{n(t-c)}^{n(t-a)} ψ(z) dz
        let w = psi.mass(nf * (t - c), nf * (t - a)) / (nf.sqrt() * (c - a));
        if w != 0.0 {
            acc += w * u.at_node(path, i) * (b[i + 1] - b[i]);
        }
    }
    Ok(acc)
}
