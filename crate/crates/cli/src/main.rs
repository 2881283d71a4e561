//! `immse` - estimation-error and mutual-information experiments for the
//! Gaussian channel, driven by JSON configs.
//!
//! Exit codes: 0 on success (and a passing verification), 1 on verification
//! failure or numeric error, 2 on configuration errors.

mod commands;
mod config;
mod output;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ExperimentConfig;

#[derive(Debug)]
pub enum AppError {
    /// Bad config or arguments: exit code 2.
    Config(String),
    /// Numeric or runtime failure: exit code 1.
    Run(String),
}

impl From<immse_core::Error> for AppError {
    fn from(e: immse_core::Error) -> Self {
        match e {
            immse_core::Error::Domain(_) | immse_core::Error::Config(_) => {
                AppError::Config(e.to_string())
            }
            immse_core::Error::Numeric(_) => AppError::Run(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "immse",
    version,
    about = "Estimation-error and mutual-information toolkit for Gaussian channels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Path to the JSON experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config's output_dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed override for anything randomized.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker thread count (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Discretize a kernel and export its eigenvalues as CSV.
    Spectrum,
    /// Closed-form error/information curves with identity residuals.
    Curves,
    /// Run every identity check and write a verification report.
    Verify,
    /// Seeded Monte Carlo channel simulation with oracle comparisons.
    Simulate,
    /// Yovits-Jackson integral and Toeplitz convergence study.
    Yj,
}

fn run(cli: &Cli) -> Result<u8, AppError> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(AppError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| AppError::Run(format!("cannot configure thread pool: {e}")))?;
    }
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| AppError::Config("--config <path> is required".into()))?;
    let cfg = ExperimentConfig::load(config_path)?;
    let out_dir = cli
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| AppError::Config(format!("cannot create {}: {e}", out_dir.display())))?;
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    match cli.command {
        Command::Spectrum => commands::cmd_spectrum(&cfg, &out_dir).map(|()| 0),
        Command::Curves => commands::cmd_curves(&cfg, &out_dir).map(|()| 0),
        Command::Verify => commands::cmd_verify(&cfg, &out_dir, seed, cli.threads),
        Command::Simulate => commands::cmd_simulate(&cfg, &out_dir, seed).map(|()| 0),
        Command::Yj => commands::cmd_yj(&cfg, &out_dir).map(|()| 0),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(AppError::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(AppError::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
