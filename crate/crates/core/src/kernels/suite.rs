//! Batches of hypothesis checks described by a serializable config.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fbm::Hurst;
use crate::grid::GridSpec;
use crate::kernels::hypotheses::{
    check_h1, check_h4, check_h5, check_h6, check_h7, check_h8, check_sup_conditions,
    default_ladder, HypothesisReport, SupVariant, Verdict,
};
use crate::kernels::{AlphaRule, KernelSequence};

/// Cells of the grid used to tabulate non-monomial families.
pub const TABLE_CELLS: usize = 1 << 11;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", deny_unknown_fields)]
pub enum FamilySpec {
    /// `n^scale · tⁿ`.
    ScaledMonomial { scale: f64 },
    /// `φ_n ≡ value`.
    Constant { value: f64 },
    /// `φ_n ≡ 1/n`.
    InverseN,
    /// `φ_n(t) = t` for every `n`.
    Identity,
    /// Node samples on a uniform grid of `n_intervals` cells, one row per `n`.
    Table {
        name: String,
        n_intervals: usize,
        rows: BTreeMap<u32, Vec<f64>>,
    },
}

impl FamilySpec {
    pub fn build(&self, probe_ns: &[u32], alpha_rule: AlphaRule) -> Result<KernelSequence> {
        let grid = || GridSpec::uniform(TABLE_CELLS);
        let seq = match self {
            Self::ScaledMonomial { scale } => KernelSequence::scaled_monomial(*scale),
            Self::Constant { value } => {
                let v = *value;
                KernelSequence::table_from_fn(&format!("const {v}"), &grid()?, probe_ns, |_, _| v)?
            }
            Self::InverseN => {
                KernelSequence::table_from_fn("1/n", &grid()?, probe_ns, |n, _| 1.0 / f64::from(n))?
            }
            Self::Identity => KernelSequence::table_from_fn("t", &grid()?, probe_ns, |_, t| t)?,
            Self::Table {
                name,
                n_intervals,
                rows,
            } => {
                let g = GridSpec::uniform(*n_intervals)?;
                for (n, row) in rows {
                    if row.len() != n_intervals + 1 {
                        return Err(Error::Config(format!(
                            "table row n={n} has {} values, expected {}",
                            row.len(),
                            n_intervals + 1
                        )));
                    }
                }
                if let Some(n) = probe_ns.iter().find(|n| !rows.contains_key(n)) {
                    return Err(Error::Config(format!(
                        "table `{name}` has no row for n={n}"
                    )));
                }
                KernelSequence::table_from_fn(name, &g, probe_ns, |n, t| {
                    let row = &rows[&n];
                    row[(t * *n_intervals as f64).round() as usize]
                })?
            }
        };
        Ok(seq.with_alpha_rule(alpha_rule))
    }
}

/// One condition to check, with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "name", deny_unknown_fields)]
pub enum Check {
    H1,
    H2,
    H3,
    H3m { m: u32 },
    H4,
    H5 { r: f64 },
    H6,
    H7,
    H8 { p: f64 },
}

impl Check {
    pub fn label(&self) -> &'static str {
        match self {
            Self::H1 => "h1",
            Self::H2 => "h2",
            Self::H3 => "h3",
            Self::H3m { .. } => "h3m",
            Self::H4 => "h4",
            Self::H5 { .. } => "h5",
            Self::H6 => "h6",
            Self::H7 => "h7",
            Self::H8 { .. } => "h8",
        }
    }

    fn needs_hurst(&self) -> bool {
        matches!(
            self,
            Self::H4 | Self::H5 { .. } | Self::H6 | Self::H7 | Self::H8 { .. }
        )
    }
}

/// A family together with the checks run against it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckGroup {
    pub family: FamilySpec,
    pub checks: Vec<Check>,
}

fn default_deltas() -> Vec<f64> {
    vec![0.5, 0.9]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub schema: u32,
    #[serde(rename = "H", default)]
    pub hurst: Option<f64>,
    #[serde(default = "default_ladder")]
    pub probe_ns: Vec<u32>,
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default)]
    pub alpha_rule: AlphaRule,
    pub groups: Vec<CheckGroup>,
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Config(m));
        if self.schema != 1 {
            return err(format!("unsupported schema version {}", self.schema));
        }
        if self.groups.iter().all(|g| g.checks.is_empty()) {
            return err("no hypotheses requested".into());
        }
        if self.hurst.is_none()
            && self
                .groups
                .iter()
                .flat_map(|g| &g.checks)
                .any(Check::needs_hurst)
        {
            return err("h4 to h8 need the Hurst parameter `H`".into());
        }
        if let Some(h) = self.hurst {
            Hurst::new(h).map_err(|e| Error::Config(e.to_string()))?;
        }
        if self.deltas.iter().any(|d| !(*d >= 0.0 && *d < 1.0)) {
            return err("deltas must lie in [0, 1)".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub schema: u32,
    pub reports: Vec<HypothesisReport>,
}

impl SuiteReport {
    pub fn all_support(&self) -> bool {
        self.reports.iter().all(|r| r.verdict == Verdict::Supports)
    }
}

pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    cfg.validate()?;
    let ns = &cfg.probe_ns;
    let hurst = cfg.hurst.map(Hurst::new).transpose()?;
    let h = || hurst.expect("validated");
    // h7 needs δ > 0
    let h7_deltas: Vec<f64> = cfg.deltas.iter().copied().filter(|d| *d > 0.0).collect();
    let mut reports = Vec::new();
    for group in &cfg.groups {
        let seq = group.family.build(ns, cfg.alpha_rule)?;
        for check in &group.checks {
            log::info!("{} on {}", check.label(), seq.name());
            let r = match *check {
                Check::H1 => check_h1(&seq, ns)?,
                Check::H2 => check_sup_conditions(&seq, ns, &cfg.deltas, SupVariant::H2)?,
                Check::H3 => check_sup_conditions(&seq, ns, &cfg.deltas, SupVariant::H3)?,
                Check::H3m { m } => {
                    check_sup_conditions(&seq, ns, &cfg.deltas, SupVariant::H3m(m))?
                }
                Check::H4 => check_h4(&seq, h(), ns)?,
                Check::H5 { r } => check_h5(&seq, h(), ns, r)?,
                Check::H6 => check_h6(&seq, h(), ns)?,
                Check::H7 => check_h7(&seq, h(), ns, &h7_deltas)?,
                Check::H8 { p } => check_h8(&seq, h(), ns, p)?,
            };
            reports.push(r);
        }
    }
    Ok(SuiteReport { schema: 1, reports })
}

/// The monomial family at `H`: (h1, h2, h3, h4, h5) for `H ≥ 1/2` and
/// (h3, h4, h6, h7, h8 with `p = 1.5`) below. (h1) takes `√n tⁿ` since `∫φ_n²`
/// of `n^H tⁿ` is unbounded for `H > 1/2`.
pub fn monomial_suite(h: f64) -> SuiteConfig {
    let fam = |scale: f64| FamilySpec::ScaledMonomial { scale };
    let groups = if h >= 0.5 {
        vec![
            CheckGroup {
                family: fam(0.5),
                checks: vec![Check::H1],
            },
            CheckGroup {
                family: fam(h),
                checks: vec![Check::H2, Check::H3, Check::H4, Check::H5 { r: 1.0 }],
            },
        ]
    } else {
        vec![CheckGroup {
            family: fam(h),
            checks: vec![
                Check::H3,
                Check::H4,
                Check::H6,
                Check::H7,
                Check::H8 { p: 1.5 },
            ],
        }]
    };
    SuiteConfig {
        schema: 1,
        hurst: Some(h),
        probe_ns: default_ladder(),
        deltas: default_deltas(),
        alpha_rule: AlphaRule::default(),
        groups,
    }
}

/// One failing family per condition applicable at `H`.
pub fn counterexample_suite(h: f64) -> SuiteConfig {
    let one = FamilySpec::Constant { value: 1.0 };
    let group = |family: FamilySpec, check: Check| CheckGroup {
        family,
        checks: vec![check],
    };
    let mut groups = vec![
        group(FamilySpec::InverseN, Check::H1),
        group(one.clone(), Check::H2),
        group(one.clone(), Check::H3),
        group(FamilySpec::ScaledMonomial { scale: 0.0 }, Check::H4),
        group(one.clone(), Check::H5 { r: 1.0 }),
    ];
    if h < 0.5 {
        groups.extend([
            group(FamilySpec::ScaledMonomial { scale: 1.0 }, Check::H6),
            group(FamilySpec::Identity, Check::H7),
            group(one, Check::H8 { p: 1.5 }),
        ]);
    }
    SuiteConfig {
        schema: 1,
        hurst: Some(h),
        probe_ns: default_ladder(),
        deltas: default_deltas(),
        alpha_rule: AlphaRule::default(),
        groups,
    }
}

/// `φ_n ≡ 1` against (h2).
pub fn constant_suite() -> SuiteConfig {
    SuiteConfig {
        schema: 1,
        hurst: None,
        probe_ns: default_ladder(),
        deltas: default_deltas(),
        alpha_rule: AlphaRule::default(),
        groups: vec![CheckGroup {
            family: FamilySpec::Constant { value: 1.0 },
            checks: vec![Check::H2],
        }],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip() {
        let cfg = monomial_suite(0.35);
        let s = serde_json::to_string(&cfg).unwrap();
        assert!(s.contains(r#"{"name":"h8","p":1.5}"#), "{s}");
        let back: SuiteConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back, cfg);
        let min: SuiteConfig = serde_json::from_str(
            r#"{"schema":1,"groups":[{"family":{"kind":"constant","value":1},"checks":[{"name":"h2"}]}]}"#,
        )
        .unwrap();
        assert_eq!(min, constant_suite());
    }

    #[test]
    fn validation() {
        let mut cfg = constant_suite();
        cfg.groups[0].checks.push(Check::H4);
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        cfg.schema = 2;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn constant_family_fails_h2() {
        let r = run_suite(&constant_suite()).unwrap();
        assert_eq!(r.reports[0].verdict, Verdict::Fails);
        assert!(!r.all_support());
    }

    #[test]
    fn table_rows_are_read_at_nodes() {
        let rows: BTreeMap<u32, Vec<f64>> = [16, 32, 64]
            .iter()
            .map(|&n| {
                (
                    n,
                    (0..=8)
                        .map(|k| (f64::from(k) / 8.0).powi(n as i32))
                        .collect(),
                )
            })
            .collect();
        let fam = FamilySpec::Table {
            name: "tn".into(),
            n_intervals: 8,
            rows,
        };
        let seq = fam.build(&[16, 32, 64], AlphaRule::default()).unwrap();
        assert_eq!(seq.eval(32, 1.0).unwrap(), 1.0);
        assert!(fam.build(&[16, 128], AlphaRule::default()).is_err());
    }
}
