//! The `mongeampere` command line: `solve`, `verify`, `study` and
//! `transport`, each driven by a config file (see [`config`]).
//!
//! Every command writes `resolved.ini` (the effective configuration with all
//! defaults) next to its outputs:
//!
//! | command     | files                                                      |
//! |-------------|------------------------------------------------------------|
//! | `solve`     | `u.csv`/`u.vtk`, `trace.csv`, `summary.txt`                |
//! | `verify`    | `checks.csv`, `summary.txt`, `barrier.csv` (barrier check) |
//! | `study`     | `study.csv`, `summary.txt`                                 |
//! | `transport` | `u.csv`/`u.vtk`, `transport.csv`, `summary.txt`            |
//!
//! Exit codes are listed in [`exit`].

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

pub use config::RunConfig;

pub mod exit {
    pub const OK: i32 = 0;
    /// Config, argument or I/O error.
    pub const CONFIG: i32 = 1;
    /// Continuation stalled.
    pub const STALL: i32 = 2;
    /// Ellipticity lost.
    pub const ELLIPTICITY: i32 = 3;
    /// A hypothesis check failed (including the subsolution gate of `solve`).
    pub const HYPOTHESIS: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {message}", path = .0.display(), message = .1)]
    Io(PathBuf, String),
    #[error("{0}")]
    Hypothesis(String),
    #[error("{message}")]
    Solver { code: i32, message: String },
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(..) => exit::CONFIG,
            CliError::Hypothesis(_) => exit::HYPOTHESIS,
            CliError::Solver { code, .. } => *code,
        }
    }
}

impl From<config::ConfigError> for CliError {
    fn from(e: config::ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "mongeampere",
    version,
    about = "Dirichlet problems for Monge-Ampère type equations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve by continuation from the subsolution.
    Solve(RunArgs),
    /// Run the hypothesis checks listed in `checks.names`.
    Verify(RunArgs),
    /// Convergence study over `study.h`.
    Study(RunArgs),
    /// Solve, then evaluate the transport residual `|det DT| − ψ`.
    Transport(RunArgs),
}

#[derive(Debug, Clone, clap::Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Sampling seed (overrides `seed`).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated field formats: csv, vtk (overrides `output.formats`).
    #[arg(long, value_delimiter = ',')]
    pub format: Option<Vec<String>>,
}

/// Reads the config file and applies the command-line overrides.
pub fn load_config(args: &RunArgs) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Io(args.config.clone(), e.to_string()))?;
    let mut cfg = RunConfig::parse(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", args.config.display())))?;
    if let Some(out) = &args.out {
        cfg.output.dir = out.clone();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(f) = &args.format {
        cfg.output.set_formats(f).map_err(CliError::Config)?;
    }
    Ok(cfg)
}

fn report(result: Result<i32, CliError>) -> i32 {
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    }
}

pub fn cmd_solve(cfg: &RunConfig) -> i32 {
    report(commands::solve(cfg))
}

pub fn cmd_verify(cfg: &RunConfig) -> i32 {
    report(commands::verify(cfg))
}

pub fn cmd_study(cfg: &RunConfig) -> i32 {
    report(commands::study(cfg))
}

pub fn cmd_transport(cfg: &RunConfig) -> i32 {
    report(commands::transport(cfg))
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                exit::CONFIG
            } else {
                exit::OK
            };
            let _ = e.print();
            return code;
        }
    };
    let (run, args): (fn(&RunConfig) -> i32, _) = match &cli.command {
        Command::Solve(a) => (cmd_solve, a),
        Command::Verify(a) => (cmd_verify, a),
        Command::Study(a) => (cmd_study, a),
        Command::Transport(a) => (cmd_transport, a),
    };
    match load_config(args) {
        Ok(cfg) => run(&cfg),
        Err(e) => report(Err(e)),
    }
}
