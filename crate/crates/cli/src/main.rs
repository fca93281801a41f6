//! `timecoef`: batch experiments driven by a TOML config.
//!
//! Exit codes: 0 success, 1 validation or hypothesis failure, 2 numerical
//! failure (including failed kernel checks), 3 I/O.

mod commands;
mod config;
mod expr;

use clap::{Args, Parser, Subcommand};
use config::ExperimentConfig;
use std::path::PathBuf;
use std::process::ExitCode;
use timecoef::ErrorCategory;

#[derive(Parser)]
#[command(
    name = "timecoef",
    version,
    about = "Forward, kernel, reconstruction and stability experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides every seed in the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the forward problem and write the solution and Neumann record.
    Forward(Common),
    /// Build the fundamental solution and run its checks.
    KernelVerify(Common),
    /// Recover σ(t) from a Neumann record.
    Reconstruct {
        #[command(flatten)]
        common: Common,
        /// Neumann record CSV written by `forward`.
        #[arg(long)]
        measured: Option<PathBuf>,
    },
    /// Sample coefficient pairs and estimate the Lipschitz constant.
    StabilitySweep(Common),
}

fn run(cmd: Command) -> timecoef::Result<bool> {
    let load = |c: &Common| ExperimentConfig::load(&c.config, c.seed);
    match cmd {
        Command::Forward(c) => commands::forward(&load(&c)?, &c.out),
        Command::KernelVerify(c) => commands::kernel_verify(&load(&c)?, &c.out),
        Command::Reconstruct { common, measured } => {
            commands::reconstruct(&load(&common)?, measured.as_deref(), &common.out)
        }
        Command::StabilitySweep(c) => commands::stability_sweep(&load(&c)?, &c.out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: checks failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.category() {
                ErrorCategory::Validation => 1,
                ErrorCategory::Numerical => 2,
                ErrorCategory::Io => 3,
            })
        }
    }
}
