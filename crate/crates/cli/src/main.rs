//! `skorolim`: Monte Carlo limit experiments, hypothesis checks and closed
//! forms from the command line.
//!
//! Exit codes: 0 when every verdict supports, 1 when one does not, 2 on a
//! usage or configuration error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use skorolim::fbm::Hurst;
use skorolim::integrals::MollifierKind;
use skorolim::kernels::{
    closed_form_double_integral, constant_suite, counterexample_suite, double_integral_quadrature,
    monomial_h_norm, monomial_limit, monomial_suite, run_suite, SuiteConfig,
};
use skorolim::montecarlo::{run_convolution, run_experiment, ConvolutionConfig, ExperimentConfig};

use skorolim_cli::presets::{ChaosIntegrand, ConvolutionPreset, HypothesisPreset, LimitPreset};
use skorolim_cli::{config, output, presets, OUT_ENV};

/// Relative error above which `closed-forms --check` fails.
const CHECK_TOL: f64 = 1e-8;

#[derive(Parser, Debug)]
#[command(name = "skorolim", version, about)]
struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Directory receiving one subdirectory of artifacts per run.
    #[arg(long, global = true, env = OUT_ENV, default_value = "skorolim-out")]
    out: PathBuf,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct RunOverrides {
    /// Replace the seed of the config.
    #[arg(long)]
    seed: Option<u64>,

    /// Replace the number of Monte Carlo paths.
    #[arg(long)]
    paths: Option<usize>,

    /// Also write tidy per-rung statistics to plot_data.csv.
    #[arg(long)]
    emit_plot_data: bool,

    /// Print the resolved config as JSON and exit without running.
    #[arg(long)]
    print_config: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a limit experiment and compare it with its stable limit law.
    VerifyLimit {
        #[arg(long, conflicts_with = "config", required_unless_present = "config")]
        preset: Option<LimitPreset>,
        /// JSON config (schema 1) or a summary.json from an earlier run.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        hurst: Option<f64>,
        /// Order of the iterated integral for the hermite preset.
        #[arg(long, default_value_t = 2)]
        order: u32,
        /// Integrand of the hermite preset.
        #[arg(long, value_enum, default_value_t = ChaosIntegrand::One)]
        integrand: ChaosIntegrand,
        #[command(flatten)]
        run: RunOverrides,
    },
    /// Check the kernel conditions (h1)–(h8) on a probe ladder.
    CheckHypotheses {
        #[arg(long, conflicts_with = "config", required_unless_present = "config")]
        preset: Option<HypothesisPreset>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        hurst: Option<f64>,
        /// Print the resolved config as JSON and exit without running.
        #[arg(long)]
        print_config: bool,
    },
    /// Evaluate the monomial closed forms.
    ClosedForms {
        #[arg(long)]
        n: u32,
        #[arg(long, required_unless_present = "lemma44")]
        m: Option<u32>,
        #[arg(
            long,
            allow_negative_numbers = true,
            required_unless_present = "lemma44"
        )]
        r: Option<f64>,
        /// Compare with adaptive 2-D quadrature.
        #[arg(long)]
        check: bool,
        /// `n^{2H}‖tⁿ‖²` in the fBm norm and its limit `HΓ(2H)`.
        #[arg(long, requires = "hurst", conflicts_with_all = ["m", "r", "check"])]
        lemma44: bool,
        #[arg(long)]
        hurst: Option<f64>,
    },
    /// Run a stochastic convolution experiment.
    Convolution {
        #[arg(long, conflicts_with = "config", required_unless_present = "config")]
        preset: Option<ConvolutionPreset>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Registered mollifier: triangular or gaussian-profile.
        #[arg(long)]
        mollifier: Option<String>,
        #[command(flatten)]
        run: RunOverrides,
    },
}

/// `Ok(true)`: every verdict supports; `Ok(false)`: some verdict does not;
/// `Err`: usage or configuration error.
type Outcome = Result<bool, String>;

// A closed stdout (e.g. piping into `head`) is not an error worth a panic.
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

macro_rules! say_raw {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = write!(std::io::stdout(), $($t)*);
    }};
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .init();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let outcome = match cli.command {
        Command::VerifyLimit {
            preset,
            config,
            hurst,
            order,
            integrand,
            run,
        } => verify_limit(preset, config, hurst, order, integrand, run, &cli.out),
        Command::CheckHypotheses {
            preset,
            config,
            hurst,
            print_config,
        } => check_hypotheses(preset, config, hurst, print_config, &cli.out),
        Command::ClosedForms {
            n,
            m,
            r,
            check,
            lemma44,
            hurst,
        } => closed_forms(n, m, r, check, lemma44, hurst),
        Command::Convolution {
            preset,
            config,
            mollifier,
            run,
        } => convolution(preset, config, mollifier, run, &cli.out),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn verify_limit(
    preset: Option<LimitPreset>,
    path: Option<PathBuf>,
    hurst: Option<f64>,
    order: u32,
    integrand: ChaosIntegrand,
    run: RunOverrides,
    out: &std::path::Path,
) -> Outcome {
    let mut cfg: ExperimentConfig = match (preset, path) {
        (_, Some(p)) => config::parse(config::read(&p)?)?,
        (Some(preset), None) => {
            presets::limit(preset, hurst, order, integrand).map_err(|e| e.to_string())?
        }
        (None, None) => unreachable!("clap requires a preset or a config"),
    };
    if let Some(s) = run.seed {
        cfg.seed = s;
    }
    if let Some(m) = run.paths {
        cfg.paths = m;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    if run.print_config {
        say!("{}", config::to_file_json(&cfg));
        return Ok(true);
    }
    log::info!("running {} with {} paths", cfg.id, cfg.paths);
    let result = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let dir = output::run_dir(out, &cfg.id)?;
    output::write_experiment(&dir, &result, run.emit_plot_data)?;
    let s = &result.summary;
    say!(
        "{}: limit variance {:.6}, digest {}",
        cfg.id,
        s.target_variance,
        s.digest
    );
    say_raw!("{}", output::verdict_table(&s.verdicts));
    say!("artifacts in {}", dir.display());
    Ok(s.passed())
}

fn check_hypotheses(
    preset: Option<HypothesisPreset>,
    path: Option<PathBuf>,
    hurst: Option<f64>,
    print_config: bool,
    out: &std::path::Path,
) -> Outcome {
    let (id, cfg): (String, SuiteConfig) = match (preset, path) {
        (_, Some(p)) => {
            let stem = p
                .file_stem()
                .map_or("hypotheses".into(), |s| s.to_string_lossy().into_owned());
            (stem, config::parse_versioned(config::read(&p)?)?)
        }
        (Some(HypothesisPreset::Constant), None) => {
            ("hypotheses-constant".into(), constant_suite())
        }
        (Some(p), None) => {
            let h = hurst.ok_or("this preset needs --hurst")?;
            Hurst::new(h).map_err(|e| e.to_string())?;
            match p {
                HypothesisPreset::Monomial => {
                    (format!("hypotheses-monomial-H{h}"), monomial_suite(h))
                }
                _ => (
                    format!("hypotheses-counterexamples-H{h}"),
                    counterexample_suite(h),
                ),
            }
        }
        (None, None) => unreachable!("clap requires a preset or a config"),
    };
    cfg.validate().map_err(|e| e.to_string())?;
    if print_config {
        say!("{}", config::to_file_json(&cfg));
        return Ok(true);
    }
    let report = run_suite(&cfg).map_err(|e| e.to_string())?;
    let dir = output::run_dir(out, &id)?;
    output::write_json(&dir, "report.json", &report)?;
    say_raw!("{}", output::hypothesis_table(&report.reports));
    say!("report in {}", dir.join("report.json").display());
    Ok(report.all_support())
}

fn closed_forms(
    n: u32,
    m: Option<u32>,
    r: Option<f64>,
    check: bool,
    lemma44: bool,
    hurst: Option<f64>,
) -> Outcome {
    if lemma44 {
        let h = Hurst::new(hurst.expect("clap requires --hurst")).map_err(|e| e.to_string())?;
        let v = monomial_h_norm(n, h).map_err(|e| e.to_string())?;
        let lim = monomial_limit(h);
        say!("n^(2H)*|t^n|^2 = {v:.15e}");
        say!("limit H*Gamma(2H) = {lim:.15e}");
        say!("relative gap = {:.3e}", ((v - lim) / lim).abs());
        return Ok(true);
    }
    let (m, r) = (m.expect("clap requires --m"), r.expect("clap requires --r"));
    let v = closed_form_double_integral(n, m, r).map_err(|e| e.to_string())?;
    say!("closed form = {v:.15e}");
    if !check {
        return Ok(true);
    }
    let q = double_integral_quadrature(n, m, r).map_err(|e| e.to_string())?;
    let rel = ((q - v) / v).abs();
    say!("quadrature = {q:.15e}");
    say!("relative error = {rel:.3e}");
    Ok(rel < CHECK_TOL)
}

fn convolution(
    preset: Option<ConvolutionPreset>,
    path: Option<PathBuf>,
    mollifier: Option<String>,
    run: RunOverrides,
    out: &std::path::Path,
) -> Outcome {
    let kind = match &mollifier {
        Some(name) => Some(
            MollifierKind::ALL
                .into_iter()
                .find(|k| k.name() == name)
                .ok_or_else(|| {
                    format!("unregistered mollifier `{name}`; known: triangular, gaussian-profile")
                })?,
        ),
        None => None,
    };
    let mut cfg: ConvolutionConfig = match (preset, path) {
        (_, Some(p)) => config::parse(config::read(&p)?)?,
        (Some(preset), None) => {
            presets::convolution(preset, kind.unwrap_or(MollifierKind::Triangular))
        }
        (None, None) => unreachable!("clap requires a preset or a config"),
    };
    if let Some(k) = kind {
        cfg.mollifier = k;
    }
    if let Some(s) = run.seed {
        cfg.seed = s;
    }
    if let Some(m) = run.paths {
        cfg.paths = m;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    if run.print_config {
        say!("{}", config::to_file_json(&cfg));
        return Ok(true);
    }
    let result = run_convolution(&cfg).map_err(|e| e.to_string())?;
    let dir = output::run_dir(out, &cfg.id)?;
    output::write_convolution(&dir, &result, run.emit_plot_data)?;
    let s = &result.summary;
    say!("{}: horizon {}, digest {}", cfg.id, s.horizon, s.digest);
    for rung in &s.ladder {
        let vars: Vec<String> = rung
            .points
            .iter()
            .map(|p| format!("t={}: {:.4}", p.t, p.moments.var))
            .collect();
        say!(
            "n={:4}  variance {}  max |corr| {:.4}",
            rung.n,
            vars.join(", "),
            rung.max_off_diagonal
        );
    }
    say_raw!("{}", output::verdict_table(&s.verdicts));
    say!("artifacts in {}", dir.display());
    Ok(s.passed())
}
