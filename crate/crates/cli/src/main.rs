//! Command-line front end for the network simulator.
//!
//! Subcommands:
//! - `simulate`: run per-trial Monte-Carlo results to CSV.
//! - `sweep`: run a parameter sweep and aggregate per point and scheme.
//! - `fixtures`: replay the embedded reference fixtures and report.
//! - `validate`: run randomized invariant checks with counterexample
//!   emission and replay.
//!
//! Exit codes: 0 success, 2 configuration error, 3 fixture or validation
//! failure, 4 enumeration budget exceeded.

mod output;
mod validate;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use irsnet::baselines::BaselineError;
use irsnet::sim::{run_sweep, run_trials, SimConfig, SimError};

#[derive(Debug, Parser)]
#[command(name = "irsnet", version, about = "Multi-IRS terahertz network simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run Monte-Carlo trials and write one CSV row per trial and scheme.
    Simulate {
        /// Path to the JSON configuration.
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path; defaults to the config's `output`, then
        /// `trials.csv`. A run manifest is written next to it.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the configured parameter sweep and write aggregated CSV rows.
    Sweep {
        /// Path to the JSON configuration; must contain a `sweep` section.
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path; defaults to the config's `output`, then
        /// `sweep.csv`. A run manifest is written next to it.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Replay the embedded reference fixtures and print one line per check.
    Fixtures,
    /// Run randomized invariant checks (stability, enumeration dominance,
    /// iteration bounds, coherent-combining dominance).
    Validate {
        /// Optional JSON configuration supplying radio, noise, CSI, and
        /// seed values; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Randomized instances per check; 0 reports zero checks and
        /// passes vacuously.
        #[arg(long, default_value_t = 50)]
        budget: u64,
        /// Where to write the first failing counterexample.
        #[arg(long, default_value = "counterexample.json")]
        counterexample: PathBuf,
        /// Deliberately run the matching checks with a faulty acceptance
        /// policy to exercise counterexample emission.
        #[arg(long)]
        inject_fault: bool,
        /// Replay a previously emitted counterexample file instead of
        /// running the full suite.
        #[arg(long)]
        replay: Option<PathBuf>,
    },
}

/// Failures mapped onto the documented exit codes.
#[derive(Debug)]
enum CliError {
    /// Unreadable, unparsable, or invalid configuration (exit 2).
    Config(String),
    /// A fixture or validation check failed (exit 3).
    Check(String),
    /// An enumerating scheme needs more evaluations than budgeted (exit 4).
    Budget(String),
    /// Everything else, chiefly I/O on result files (exit 1).
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Config(_) => 2,
            CliError::Check(_) => 3,
            CliError::Budget(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m)
            | CliError::Check(m)
            | CliError::Budget(m)
            | CliError::Runtime(m) => m,
        }
    }
}

impl From<SimError> for CliError {
    fn from(err: SimError) -> Self {
        match err {
            SimError::InvalidConfig(_) => CliError::Config(err.to_string()),
            SimError::Baseline(BaselineError::BudgetExceeded { .. }) => {
                CliError::Budget(err.to_string())
            }
            other => CliError::Runtime(other.to_string()),
        }
    }
}

fn load_config(path: &Path) -> Result<SimConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let config: SimConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    config.validate()?;
    Ok(config)
}

fn resolve_output(flag: Option<PathBuf>, config: &SimConfig, default: &str) -> PathBuf {
    flag.or_else(|| config.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(default))
}

fn cmd_simulate(config_path: &Path, output: Option<PathBuf>) -> Result<(), CliError> {
    let config = load_config(config_path)?;
    let out_path = resolve_output(output, &config, "trials.csv");
    let results = run_trials(&config)?;
    let csv = output::trial_csv(&results);
    output::write_result(&out_path, &csv, &config, "simulate")?;
    println!(
        "simulate: {} trials x {} schemes -> {}",
        config.trials,
        config.schemes.len(),
        out_path.display()
    );
    Ok(())
}

fn cmd_sweep(config_path: &Path, output: Option<PathBuf>) -> Result<(), CliError> {
    let config = load_config(config_path)?;
    if config.sweep.is_none() {
        return Err(CliError::Config(format!(
            "{}: sweep requires a `sweep` section",
            config_path.display()
        )));
    }
    let out_path = resolve_output(output, &config, "sweep.csv");
    let rows = run_sweep(&config)?;
    let csv = output::sweep_csv(&rows);
    output::write_result(&out_path, &csv, &config, "sweep")?;
    println!("sweep: {} rows -> {}", rows.len(), out_path.display());
    Ok(())
}

fn cmd_fixtures() -> Result<(), CliError> {
    let report = irsnet::fixtures::run_all()
        .map_err(|e| CliError::Runtime(format!("fixture harness error: {e}")))?;
    for check in &report.checks {
        let status = if check.passed { "PASS" } else { "FAIL" };
        println!("{status} {}: {}", check.name, check.detail);
    }
    let failed = report.failures().count();
    println!("fixtures: {} checks, {} failed", report.checks.len(), failed);
    if failed > 0 {
        return Err(CliError::Check(format!("{failed} fixture checks failed")));
    }
    Ok(())
}

fn cmd_validate(
    config_path: Option<PathBuf>,
    budget: u64,
    counterexample: PathBuf,
    inject_fault: bool,
    replay: Option<PathBuf>,
) -> Result<(), CliError> {
    let config = match config_path {
        Some(path) => load_config(&path)?,
        None => SimConfig::default(),
    };
    if let Some(replay_path) = replay {
        return validate::replay(&replay_path, &config);
    }
    validate::run_suite(&config, budget, inject_fault, &counterexample)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { config, output } => cmd_simulate(&config, output),
        Command::Sweep { config, output } => cmd_sweep(&config, output),
        Command::Fixtures => cmd_fixtures(),
        Command::Validate { config, budget, counterexample, inject_fault, replay } => {
            cmd_validate(config, budget, counterexample, inject_fault, replay)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.exit_code())
        }
    }
}
