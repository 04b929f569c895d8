//! `dkf`: validate scenarios, run Monte Carlo experiments, compare runs and
//! report observability.
//!
//! Exit codes: 0 success, 1 validation failure or bad input, 2 numerical
//! failure during a run, 3 an acceptance check failed.

mod compare;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use dkf::filters::FilterKind;
use dkf::harness::{self, CheckSettings, CheckStatus};
use dkf::model::Status;
use dkf::observability;
use dkf::report::{self, OutputOptions};
use dkf::scenario::{self, ScenarioConfig, ScenarioReport};

const EXIT_VALIDATION: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_ACCEPTANCE: u8 = 3;

/// Environment variable holding the worker thread count.
const THREADS_ENV: &str = "DKF_THREADS";

#[derive(Parser, Debug)]
#[command(name = "dkf", version, about = "Consistent distributed Kalman filtering simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a scenario's standing assumptions, topology and observability.
    Validate {
        scenario: PathBuf,
        /// Print the machine-readable report instead of the summary.
        #[arg(long)]
        json: bool,
    },
    /// Run the Monte Carlo experiment and write CSV tables plus summary.json.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated subset of ckf, table1, cdkf-adaptive, cdkf-constant.
        #[arg(long, value_delimiter = ',')]
        filters: Option<Vec<FilterKind>>,
        /// Output directory; defaults to the scenario's output_dir, then runs/<name>.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write weights.csv with every fusion decision of trial 0.
        #[arg(long)]
        verbose_weights: bool,
        /// Also write states.csv with trial 0's per-step estimates.
        #[arg(long)]
        dump_states: bool,
        /// Run even if validation reports a hard failure.
        #[arg(long)]
        force: bool,
    },
    /// Join the MSE and dominance tables of several run directories.
    Compare {
        #[arg(required = true, num_args = 1..)]
        runs: Vec<PathBuf>,
        /// Write the merged CSV here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Observability Gramian extremes per window start, as CSV.
    ObservabilityReport {
        scenario: PathBuf,
        /// Window length; defaults to the declared one, then the smallest passing in 1..=24.
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(EXIT_VALIDATION);
    }
    // Usage errors share the bad-input code; exit 2 is reserved for numerical failures.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { 0 };
            e.print().ok();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Validate { scenario, json } => validate(&scenario, json),
        Command::Run {
            scenario,
            trials,
            seed,
            filters,
            out,
            verbose_weights,
            dump_states,
            force,
        } => run(&scenario, RunOverrides { trials, seed, filters, out }, OutputOptions { weights: verbose_weights, states: dump_states }, force),
        Command::Compare { runs, out } => compare::compare(&runs, out.as_deref()).map(|_| ExitCode::SUCCESS),
        Command::ObservabilityReport { scenario, window, out } => observability_report(&scenario, window, out.as_deref()),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            let numerical = e.downcast_ref::<dkf::Error>().is_some_and(dkf::Error::is_numerical);
            ExitCode::from(if numerical { EXIT_NUMERICAL } else { EXIT_VALIDATION })
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().with_context(|| format!("{THREADS_ENV} must be a positive integer, got {raw:?}"))?;
    if threads == 0 {
        bail!("{THREADS_ENV} must be a positive integer, got 0");
    }
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().context("configuring the worker pool")?;
    Ok(())
}

fn load(path: &Path) -> Result<(ScenarioConfig, dkf::harness::Scenario)> {
    let config = ScenarioConfig::from_path(path).with_context(|| format!("loading {}", path.display()))?;
    let scenario = config.build().with_context(|| format!("building scenario from {}", path.display()))?;
    Ok((config, scenario))
}

fn print_report(report: &ScenarioReport) {
    println!("scenario {}", report.scenario);
    for f in &report.assumptions.findings {
        let tag = match (f.status, f.severity) {
            (Status::Pass, _) => "ok  ",
            (Status::Fail, dkf::model::Severity::Hard) => "FAIL",
            (Status::Fail, dkf::model::Severity::Soft) => "warn",
        };
        let witness = match (f.witness_k, f.witness_value) {
            (Some(k), Some(v)) => format!(" (k = {k}, value {v:.4e})"),
            (Some(k), None) => format!(" (k = {k})"),
            _ => String::new(),
        };
        println!("  [{tag}] {}: {}{witness}", f.check, f.detail);
    }
    let singular = &report.assumptions.singular_steps;
    if !singular.is_empty() {
        let shown: Vec<String> = singular.iter().take(12).map(|k| k.to_string()).collect();
        let more = if singular.len() > 12 { format!(", ... ({} total)", singular.len()) } else { String::new() };
        println!("  [note] A_k singular at k = {}{more}; allowed by the filters", shown.join(", "));
    }
    println!("  [{}] topology.strongly_connected", if report.strongly_connected { "ok  " } else { "warn" });
    println!("  [{}] topology.primitive (A^(N-1) > 0)", if report.primitive { "ok  " } else { "warn" });
    let uco_ok = report.observability.as_ref().is_some_and(|r| r.passed);
    match &report.observability {
        Some(r) => println!(
            "  [{}] observability: {}; min alpha {:.4e}, max beta {:.4e}, weakest start k = {}",
            if uco_ok { "ok  " } else { "warn" },
            report.observability_note,
            r.min_alpha,
            r.max_beta,
            r.worst_k
        ),
        None => println!("  [warn] observability: {}", report.observability_note),
    }
}

fn validate(path: &Path, json: bool) -> Result<ExitCode> {
    let (config, scenario) = load(path)?;
    let report = scenario::validate_scenario(&scenario, &config.observability);
    if json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print_report(&report);
    }
    if report.has_hard_failure() {
        eprintln!("validation failed: the filters cannot run on this scenario");
        return Ok(ExitCode::from(EXIT_VALIDATION));
    }
    for w in report.warnings() {
        eprintln!("warning: {w}");
    }
    Ok(ExitCode::SUCCESS)
}

struct RunOverrides {
    trials: Option<usize>,
    seed: Option<u64>,
    filters: Option<Vec<FilterKind>>,
    out: Option<PathBuf>,
}

fn run(path: &Path, overrides: RunOverrides, options: OutputOptions, force: bool) -> Result<ExitCode> {
    let mut config = ScenarioConfig::from_path(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(t) = overrides.trials {
        config.trials = t;
    }
    if let Some(s) = overrides.seed {
        config.seed = s;
    }
    if let Some(f) = overrides.filters {
        config.filters = f;
    }
    let scenario = config.build().with_context(|| format!("building scenario from {}", path.display()))?;
    let report = scenario::validate_scenario(&scenario, &config.observability);
    if report.has_hard_failure() {
        if !force {
            print_report(&report);
            eprintln!("validation failed; pass --force to run anyway");
            return Ok(ExitCode::from(EXIT_VALIDATION));
        }
        eprintln!("warning: running despite hard validation failures (--force)");
    }
    for w in report.warnings() {
        eprintln!("warning: {w}");
    }

    let out = overrides
        .out
        .or_else(|| config.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs").join(config.display_name()));
    let experiment = config.experiment();
    log::info!("running {} trials of {} steps", experiment.trials, experiment.horizon);
    let result = harness::run_experiment(&scenario, &experiment).context("experiment failed")?;
    let assessment = harness::assess(&result, &CheckSettings::default()).context("assessing the run")?;
    let written = report::write_run(&out, &result, &assessment, options).with_context(|| format!("writing results to {}", out.display()))?;

    println!("scenario {}: {} trials, horizon {}, seed {}", result.scenario, experiment.trials, experiment.horizon, experiment.seed);
    for m in &result.filters {
        let (mean, se) = m.steady_state_mean();
        println!("  {:<14} steady-state MSE {mean:.4} (SE {se:.2e})", m.kind.name());
    }
    for c in &assessment.checks {
        let tag = match c.status {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Skipped => "skip",
        };
        println!("  [{tag}] {}: {}", c.name, c.detail);
    }
    println!("wrote {} files to {}", written.len(), out.display());
    Ok(if assessment.all_passed() { ExitCode::SUCCESS } else { ExitCode::from(EXIT_ACCEPTANCE) })
}

fn observability_report(path: &Path, window: Option<usize>, out: Option<&Path>) -> Result<ExitCode> {
    let (config, scenario) = load(path)?;
    let horizon = scenario.horizon();
    let thresholds = config.observability.thresholds();
    let window = match window.or(config.observability.window) {
        Some(w) => w,
        None => {
            let top = scenario::MAX_SWEEP_WINDOW.min(horizon);
            observability::smallest_window(&scenario.model, &scenario.sensors, 1..=top, horizon - top, thresholds)?
                .map(|r| r.window)
                .unwrap_or(top)
        }
    };
    if window > horizon {
        bail!("window {window} exceeds the horizon {horizon}");
    }
    let uco = observability::check_uco(&scenario.model, &scenario.sensors, window, 0..=horizon - window, thresholds)?;
    let mut text = String::from("k,alpha_hat,beta_hat,cond\n");
    for r in &uco.reports {
        text.push_str(&format!("{},{},{},{}\n", r.window_start, r.alpha_hat, r.beta_hat, r.condition));
    }
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    eprintln!(
        "window {window}: {} (min alpha {:.4e} at k = {}, max beta {:.4e})",
        if uco.passed { "uniformly observable" } else { "not uniformly observable" },
        uco.min_alpha,
        uco.worst_k,
        uco.max_beta
    );
    Ok(ExitCode::SUCCESS)
}
