//! `eikonal` — command-line front end for the eikonal analyzer.
//!
//! Exit codes: 0 on success, 2 on configuration errors, 3 on numerical
//! failures; errors are emitted as JSON on stderr.

mod commands;
mod config;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "eikonal",
    about = "Hopf-Lax evaluation and singular-structure analysis for the time-dependent eikonal equation"
)]
struct Cli {
    /// Path to the TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for grid scans (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Sampling seed (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Print the complete default configuration and exit.
    #[arg(long)]
    print_defaults: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate u, the minimizer set, gradients and reachable gradients at
    /// one space-time point (JSON).
    Eval,
    /// Termination times for one initial point or a sweep, with the
    /// bisection cross-check (CSV).
    Terminate,
    /// Direction Jacobian, eigenvalues, det samples and the blow-up probe
    /// (JSON).
    Spectrum,
    /// Classify listed space-time points (JSON).
    Classify,
    /// Scan a space-time grid, label components, probe smoothness; writes
    /// CSV + JSON + PGM files (JSON summary on stdout).
    Map,
}

/// Error with the exit-code class it maps to.
pub struct CliError {
    kind: &'static str,
    message: String,
}

impl CliError {
    fn config(msg: impl Into<String>) -> Self {
        Self {
            kind: "config",
            message: msg.into(),
        }
    }

    fn numerical(err: impl std::fmt::Display) -> Self {
        Self {
            kind: "numerical",
            message: err.to_string(),
        }
    }

    fn exit_code(&self) -> u8 {
        match self.kind {
            "config" => 2,
            _ => 3,
        }
    }

    fn emit(&self) {
        eprintln!(
            "{}",
            serde_json::json!({ "error": { "kind": self.kind, "message": self.message } })
        );
    }
}

fn run(cli: &Cli) -> Result<String, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::config("--config PATH is required"))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    let mut config = config::parse(&text).map_err(CliError::config)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    config.termination_budget.seed = config.seed;
    let field = config.field.build().map_err(CliError::config)?;

    let command = cli
        .command
        .as_ref()
        .ok_or_else(|| CliError::config("no subcommand given"))?;
    match command {
        Command::Eval => commands::cmd_eval(&config, &field),
        Command::Terminate => commands::cmd_terminate(&config, &field),
        Command::Spectrum => commands::cmd_spectrum(&config, &field),
        Command::Classify => commands::cmd_classify(&config, &field),
        Command::Map => commands::cmd_map(&config, &field),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.print_defaults {
        print!("{}", config::print_defaults());
        return ExitCode::SUCCESS;
    }
    if let Some(workers) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
        {
            CliError::config(format!("worker pool: {e}")).emit();
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(output) => {
            println!("{}", output.trim_end());
            ExitCode::SUCCESS
        }
        Err(err) => {
            err.emit();
            ExitCode::from(err.exit_code())
        }
    }
}
