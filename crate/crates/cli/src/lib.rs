//! Command-line front end for `minmax-lab`.
//!
//! Each subcommand reads a TOML run configuration (see [`config`]), calls
//! into the core crate, prints a short table and writes CSV/JSON artifacts
//! into the output directory. Exit codes: 0 success, 1 I/O failure,
//! 2 configuration error, 3 numerical failure, 4 minimax search that did
//! not converge (unless `--allow-nonconverged`).

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "MINMAX_LAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "minmax-lab", version, about = "Minimax risk under power-type losses")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Risk,
    Minimax,
    Exclusivity,
    Appendix,
    Classify,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pointwise risk over a grid of theta values.
    Risk(RunArgs),
    /// Minimax rule within an estimator family.
    Minimax(RunArgs),
    /// Pairwise refutation certificates between power classes.
    Exclusivity(RunArgs),
    /// The shifted absolute-moment function and its derivative.
    Appendix(RunArgs),
    /// Local power exponent of each configured loss.
    Classify(RunArgs),
}

#[derive(Debug, Clone, clap::Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub allow_nonconverged: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] minmax_lab::Error),
    #[error("{0}")]
    NotConverged(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use minmax_lab::Error as E;
        match self {
            Self::Io(_) => 1,
            Self::Config(_) => 2,
            Self::NotConverged(_) => 4,
            Self::Core(e) => match e {
                E::DegenerateLoss { .. } | E::NonFiniteRisk { .. } => 3,
                E::NotConverged { .. } => 4,
                _ => 2,
            },
        }
    }
}

/// Applies the thread cap from [`THREADS_ENV`], if set.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let (kind, args) = match cli.command {
        Command::Risk(a) => (CommandKind::Risk, a),
        Command::Minimax(a) => (CommandKind::Minimax, a),
        Command::Exclusivity(a) => (CommandKind::Exclusivity, a),
        Command::Appendix(a) => (CommandKind::Appendix, a),
        Command::Classify(a) => (CommandKind::Classify, a),
    };
    match configure_threads().and_then(|()| commands::execute(kind, &args)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("minmax-lab: {e}");
            e.exit_code()
        }
    }
}
