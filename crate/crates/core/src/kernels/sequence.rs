use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::grid::{CellFunction, GridSpec};

/// Rule producing the window start `α_n`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule")]
pub enum AlphaRule {
    /// `α_n = 1 - ln n / n`.
    #[default]
    LogOverN,
    /// The same `α` for every `n`.
    Constant { value: f64 },
}

impl AlphaRule {
    pub fn alpha(&self, n: u32) -> f64 {
        match *self {
            Self::LogOverN => {
                let nf = f64::from(n.max(1));
                (1.0 - nf.ln() / nf).clamp(0.0, 1.0)
            }
            Self::Constant { value } => value,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelFamily {
    /// `φ_n(t) = n^scale · tⁿ`.
    ScaledMonomial { scale: f64 },
    /// Samples of `φ_n` at the nodes of `grid`, one row per tabulated `n`,
    /// linearly interpolated in between.
    Table {
        name: String,
        grid: GridSpec,
        rows: BTreeMap<u32, Vec<f64>>,
    },
}

/// A family `φ_n` together with its window rule and the limit it is claimed
/// to produce.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSequence {
    pub family: KernelFamily,
    pub alpha_rule: AlphaRule,
    pub claimed_l: Option<f64>,
}

impl KernelSequence {
    pub fn scaled_monomial(scale: f64) -> Self {
        Self {
            family: KernelFamily::ScaledMonomial { scale },
            alpha_rule: AlphaRule::default(),
            claimed_l: None,
        }
    }

    /// Tabulate `f(n, t)` at the nodes of `grid` for each `n` in `ns`.
    pub fn table_from_fn(
        name: &str,
        grid: &GridSpec,
        ns: &[u32],
        f: impl Fn(u32, f64) -> f64,
    ) -> Result<Self> {
        let mut rows = BTreeMap::new();
        for &n in ns {
            let row: Vec<f64> = grid.times().iter().map(|&t| f(n, t)).collect();
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return domain(format!(
                    "table `{name}` must be finite and nonnegative (n={n})"
                ));
            }
            rows.insert(n, row);
        }
        Ok(Self {
            family: KernelFamily::Table {
                name: name.to_string(),
                grid: grid.clone(),
                rows,
            },
            alpha_rule: AlphaRule::default(),
            claimed_l: None,
        })
    }

    pub fn with_alpha_rule(mut self, rule: AlphaRule) -> Self {
        self.alpha_rule = rule;
        self
    }

    pub fn with_claimed_l(mut self, l: f64) -> Self {
        self.claimed_l = Some(l);
        self
    }

    pub fn alpha(&self, n: u32) -> f64 {
        self.alpha_rule.alpha(n)
    }

    /// Exponent `s` of a scaled monomial family.
    pub fn monomial_scale(&self) -> Option<f64> {
        match self.family {
            KernelFamily::ScaledMonomial { scale } => Some(scale),
            KernelFamily::Table { .. } => None,
        }
    }

    pub fn name(&self) -> String {
        match &self.family {
            KernelFamily::ScaledMonomial { scale } => format!("scaled-monomial(s={scale})"),
            KernelFamily::Table { name, .. } => format!("table({name})"),
        }
    }

    fn row(&self, n: u32) -> Result<(&GridSpec, &[f64])> {
        match &self.family {
            KernelFamily::Table { name, grid, rows } => match rows.get(&n) {
                Some(r) => Ok((grid, r)),
                None => domain(format!("table `{name}` has no row for n={n}")),
            },
            KernelFamily::ScaledMonomial { .. } => unreachable!("monomials have no table"),
        }
    }

    /// `φ_n(t)`; tables interpolate linearly and error on untabulated `n`.
    pub fn eval(&self, n: u32, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return domain(format!("kernels are evaluated on [0, 1], got t={t}"));
        }
        match self.family {
            KernelFamily::ScaledMonomial { scale } => {
                Ok(f64::from(n).powf(scale) * t.powi(n as i32))
            }
            KernelFamily::Table { .. } => {
                let (grid, row) = self.row(n)?;
                Ok(CellFunction::from_nodes(grid, row)?.eval(t))
            }
        }
    }

    /// `φ_n` as a piecewise-linear function on `grid` (monomials are sampled
    /// at the nodes; tables must be tabulated on `grid` itself).
    pub fn on_grid(&self, n: u32, grid: &GridSpec) -> Result<CellFunction> {
        match self.family {
            KernelFamily::ScaledMonomial { scale } => {
                let c = f64::from(n).powf(scale);
                Ok(CellFunction::from_fn(grid, |t| c * t.powi(n as i32)))
            }
            KernelFamily::Table { .. } => {
                let (own, row) = self.row(n)?;
                if own != grid {
                    return domain("a tabulated kernel can only be used on its own grid");
                }
                CellFunction::from_nodes(own, row)
            }
        }
    }

    /// The grid of a tabulated family.
    pub fn table_grid(&self) -> Option<&GridSpec> {
        match &self.family {
            KernelFamily::Table { grid, .. } => Some(grid),
            KernelFamily::ScaledMonomial { .. } => None,
        }
    }

    /// Exact average of `φ_n` over each cell of `grid`.
    pub fn cell_averages(&self, n: u32, grid: &GridSpec) -> Result<Vec<f64>> {
        match self.family {
            KernelFamily::ScaledMonomial { scale } => {
                let c = f64::from(n).powf(scale) / f64::from(n + 1);
                let p = (n + 1) as i32;
                Ok(grid
                    .times()
                    .windows(2)
                    .map(|w| c * (w[1].powi(p) - w[0].powi(p)) / (w[1] - w[0]))
                    .collect())
            }
            KernelFamily::Table { .. } => {
                let (own, row) = self.row(n)?;
                if own == grid {
                    return Ok(CellFunction::from_nodes(own, row)?.cell_means());
                }
                let f = CellFunction::from_nodes(own, row)?;
                Ok(grid
                    .times()
                    .windows(2)
                    .map(|w| {
                        // three-point Simpson on the interpolant
                        (f.eval(w[0]) + 4.0 * f.eval(0.5 * (w[0] + w[1])) + f.eval(w[1])) / 6.0
                    })
                    .collect())
            }
        }
    }
}
