//! Pipeline driver: simulate data, compute quadrature weights, produce
//! spectral estimates and comparisons, and run solver scaling benchmarks.
//!
//! Exit codes: 0 success, 2 configuration/input error, 3 numerical failure.
//! A manifest is written to the output directory for every run, including
//! failed ones.

mod commands;
mod config;

use clap::{Parser, Subcommand};
use commands::{CmdError, Manifest};
use config::Config;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "nuspectral",
    version,
    about = "Nonparametric spectral density estimation for irregularly sampled data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Plain-text key=value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Top-level seed; all randomness derives from it by stream splitting.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Worker threads; the environment variable RAYON_NUM_THREADS applies
    /// when absent.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate sampling locations and simulate process replicates to CSV.
    Simulate,
    /// Compute quadrature weights for the configured window and band.
    Weights,
    /// Evaluate the configured estimators over the frequency grid.
    Estimate,
    /// Sweep solver sizes and record timing and iteration counts.
    Bench,
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    if let Some(threads) = cli.threads {
        if rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().is_err() {
            eprintln!("warning: thread pool already initialized; --threads ignored");
        }
    }

    if std::fs::create_dir_all(&cli.out).is_err() {
        eprintln!("error: cannot create output directory {}", cli.out.display());
        return ExitCode::from(2);
    }

    let name = match cli.command {
        Command::Simulate => "simulate",
        Command::Weights => "weights",
        Command::Estimate => "estimate",
        Command::Bench => "bench",
    };

    let Some(config_path) = cli.config else {
        eprintln!("error: --config is required");
        Manifest::new(name, "none", cli.seed).write(&cli.out);
        return ExitCode::from(2);
    };
    let cfg = match Config::load(&config_path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            Manifest::new(name, "unreadable", cli.seed).write(&cli.out);
            return ExitCode::from(2);
        }
    };

    let mut manifest = Manifest::new(name, &cfg.hash(), cli.seed);
    let result = match cli.command {
        Command::Simulate => commands::cmd_simulate(&cfg, &cli.out, cli.seed, &mut manifest),
        Command::Weights => commands::cmd_weights(&cfg, &cli.out, cli.seed, &mut manifest),
        Command::Estimate => commands::cmd_estimate(&cfg, &cli.out, cli.seed, &mut manifest),
        Command::Bench => commands::cmd_bench(&cfg, &cli.out, cli.seed, &mut manifest),
    };

    let code = match result {
        Ok(()) => {
            manifest.status = "ok".to_string();
            manifest.failure_stage = None;
            0
        }
        Err(CmdError::Input(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(CmdError::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            3
        }
    };
    manifest.write(&cli.out);
    ExitCode::from(code)
}
