//! The `zsint` command line.
//!
//! Each subcommand reads a strict JSON config (unknown keys are rejected),
//! runs one computation and writes a JSON report, a CSV of records and a
//! `.meta.json` sidecar into `--out`. Only the sidecar carries a timestamp,
//! so re-running with the same arguments and config reproduces the report
//! and CSV byte for byte.
//!
//! Exit status: 0 when every check passed, 2 when a check failed, 1 on a
//! usage, config or runtime error.

mod commands;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{BoundsConfig, RsSweepConfig, SufficientCliConfig};
pub use output::Artifacts;

#[derive(Debug, Parser)]
#[command(name = "zsint", version, about = "Zähle–Stieltjes integration experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: Global,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// JSON config for the subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed of the random streams (required when anything is random).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Also write a small matplotlib script for the CSV.
    #[arg(long, global = true)]
    pub plot: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a path and write it as CSV.
    Generate(commands::GenerateArgs),
    /// Seminorms of a path and the Hölder–Gagliardo comparison.
    Seminorm(commands::SeminormArgs),
    /// Zähle–Stieltjes integral of f(X) against Y.
    Integrate(commands::IntegrateArgs),
    /// Riemann–Stieltjes sums against the ZS reference on one realization.
    RsSweep,
    /// Monte Carlo convergence rate of the Riemann–Stieltjes sums.
    Rate,
    /// Change-of-variables residuals.
    Ito,
    /// Convergence of mollified compositions.
    Mollify,
    /// Inequality checks (pathwise, singularity, weak continuity, ...).
    Bounds,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Config(String),
    Run(zsint::Error),
    Io(std::io::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Usage(m) => write!(f, "usage error: {m}"),
            Self::Config(m) => write!(f, "config error: {m}"),
            Self::Run(e) => write!(f, "error: {e}"),
            Self::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<zsint::Error> for CliError {
    fn from(e: zsint::Error) -> Self {
        match e {
            zsint::Error::InvalidArgument(m) => Self::Config(m),
            other => Self::Run(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e)
    }
}

/// Parse `argv`, run, and return the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli, &argv) {
        Ok(art) => {
            print!("{}", art.summary);
            if art.passed {
                0
            } else {
                eprintln!("one or more checks failed");
                2
            }
        }
        Err(e) => {
            eprintln!("{e}");
            1
        }
    }
}

/// Run a parsed command and write its artifacts.
pub fn execute(cli: &Cli, argv: &[OsString]) -> Result<Artifacts, CliError> {
    if let Some(n) = cli.global.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let out = commands::dispatch(cli)?;
    output::write(&cli.global, argv, out)
}
