//! Artifacts and plain-text tables.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use skorolim::kernels::{HypothesisReport, Verdict};
use skorolim::montecarlo::{ConvolutionResult, ExperimentResult, VerdictLine};

pub fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Supports => "supports",
        Verdict::Fails => "fails",
        Verdict::Inconclusive => "inconclusive",
    }
}

pub fn verdict_table(lines: &[VerdictLine]) -> String {
    let width = lines
        .iter()
        .map(|l| l.check.len())
        .max()
        .unwrap_or(5)
        .max(5);
    let mut s = format!("{:width$}  {:12}  detail\n", "check", "verdict");
    for l in lines {
        let _ = writeln!(
            s,
            "{:width$}  {:12}  {}",
            l.check,
            verdict_name(l.verdict),
            l.detail
        );
    }
    s
}

pub fn hypothesis_table(reports: &[HypothesisReport]) -> String {
    let width = reports
        .iter()
        .map(|r| r.family.len())
        .max()
        .unwrap_or(6)
        .max(6);
    let mut s = format!(
        "{:4}  {:width$}  {:6}  {:12}  limit\n",
        "cond", "family", "H", "verdict"
    );
    for r in reports {
        let h = r.hurst.map_or("-".to_string(), |h| h.to_string());
        let lim = r
            .extrapolated_limit
            .map_or("-".to_string(), |l| format!("{l:.6}"));
        let _ = writeln!(
            s,
            "{:4}  {:width$}  {:6}  {:12}  {lim}",
            r.hypothesis,
            r.family,
            h,
            verdict_name(r.verdict)
        );
    }
    s
}

fn write(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), String> {
    let p = dir.join(name);
    fs::write(&p, bytes).map_err(|e| format!("cannot write {}: {e}", p.display()))
}

pub fn run_dir(out: &Path, id: &str) -> Result<PathBuf, String> {
    let dir = out.join(id);
    fs::create_dir_all(&dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    Ok(dir)
}

pub fn write_json<T: serde::Serialize>(dir: &Path, name: &str, v: &T) -> Result<(), String> {
    let text = serde_json::to_string_pretty(v).map_err(|e| e.to_string())?;
    write(dir, name, (text + "\n").as_bytes())
}

pub fn write_experiment(dir: &Path, r: &ExperimentResult, plot: bool) -> Result<(), String> {
    write_json(dir, "summary.json", &r.summary)?;
    write(dir, "samples.csv", &r.samples_csv())?;
    write(dir, "coupling.csv", &r.coupling_csv())?;
    write(dir, "reference.csv", &r.reference_csv())?;
    write(
        dir,
        "verdicts.txt",
        verdict_table(&r.summary.verdicts).as_bytes(),
    )?;
    if plot {
        write(dir, "plot_data.csv", experiment_plot_data(r).as_bytes())?;
    }
    Ok(())
}

pub fn write_convolution(dir: &Path, r: &ConvolutionResult, plot: bool) -> Result<(), String> {
    write_json(dir, "summary.json", &r.summary)?;
    write(dir, "samples.csv", &r.samples_csv())?;
    write(dir, "reference.csv", &r.reference_csv())?;
    write(
        dir,
        "verdicts.txt",
        verdict_table(&r.summary.verdicts).as_bytes(),
    )?;
    if plot {
        write(dir, "plot_data.csv", convolution_plot_data(r).as_bytes())?;
    }
    Ok(())
}

/// Tidy `experiment_id,n,metric,value` rows, one per ladder statistic.
pub fn experiment_plot_data(r: &ExperimentResult) -> String {
    let s = &r.summary;
    let id = &s.config.id;
    let mut out = String::from("experiment_id,n,metric,value\n");
    let mut row = |n: u32, metric: &str, v: f64| {
        let _ = writeln!(out, "{id},{n},{metric},{v:e}");
    };
    for p in &s.ladder {
        row(p.n, "mean", p.moments.mean);
        row(p.n, "variance", p.moments.var);
        row(p.n, "variance_se", p.moments.se_var);
        row(p.n, "target_variance", s.target_variance);
        if let Some(d) = p.discrete_variance {
            row(p.n, "discrete_variance", d);
        }
        if let Some(g) = &p.coupling_gap {
            row(p.n, "coupling_gap", g.mean);
        }
        row(p.n, "ks_statistic", p.ks.statistic);
        row(p.n, "ks_p_value", p.ks.p_value);
        for c in &p.correlations {
            row(p.n, &format!("corr_t{}", c.probe), c.r);
        }
        for c in &p.char_functional {
            row(
                p.n,
                &format!("charfn_distance_lambda{}", c.lambda),
                c.distance,
            );
            row(p.n, &format!("charfn_se_lambda{}", c.lambda), c.combined_se);
        }
    }
    out
}

/// Tidy `experiment_id,n,t,metric,value` rows.
pub fn convolution_plot_data(r: &ConvolutionResult) -> String {
    let id = &r.summary.config.id;
    let mut out = String::from("experiment_id,n,t,metric,value\n");
    for rung in &r.summary.ladder {
        for p in &rung.points {
            for (metric, v) in [
                ("variance", p.moments.var),
                ("variance_se", p.moments.se_var),
                ("target_variance", p.target_variance),
                ("ks_statistic", p.ks.statistic),
                ("ks_p_value", p.ks.p_value),
            ] {
                let _ = writeln!(out, "{id},{},{},{metric},{v:e}", rung.n, p.t);
            }
        }
        let _ = writeln!(
            out,
            "{id},{},,max_off_diagonal_corr,{:e}",
            rung.n, rung.max_off_diagonal
        );
    }
    out
}
