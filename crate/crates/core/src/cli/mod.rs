//! Command-line front end.
//!
//! Each subcommand reads a TOML file given by `--config` (see [`commands`] for
//! the schemas), runs, and writes its output atomically to `--out` (stdout when
//! omitted, except for `benchmark`, which writes two files).
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | `verify` ran but some check failed |
//! | 2 | configuration error (bad file, invalid values, degenerate grid) |
//! | 3 | IO error or unreadable dataset / instance |
//! | 4 | solver did not converge |
//! | 5 | estimator failure (empty sample, everything pruned, ...) |
//!
//! On failure a single JSON object `{"error": {"kind", "message", "exit_code"}}`
//! is printed to stderr and no output file is created.

pub mod commands;
pub mod files;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::Profile;
use crate::error::Error;

#[derive(Debug, Parser)]
#[command(name = "weakmean", version, about = "Heavy-tailed mean estimation under weak moment assumptions")]
pub struct Cli {
    /// TOML configuration for the chosen command.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file. `benchmark` writes `<out>.csv` and `<out>.json`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overrides the seed in the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for harness trials; 0 uses every logical core.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    /// Overrides the profile in the configuration.
    #[arg(long, global = true, value_enum)]
    pub profile: Option<ProfileArg>,
    /// Also write the final testing-program instance and solution (`estimate`).
    #[arg(long, global = true)]
    pub dump_sdp: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProfileArg {
    Paper,
    Desk,
}

impl From<ProfileArg> for Profile {
    fn from(p: ProfileArg) -> Self {
        match p {
            ProfileArg::Paper => Profile::Paper,
            ProfileArg::Desk => Profile::Desk,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Estimate the mean of a CSV dataset.
    Estimate,
    /// Draw a dataset from a distribution.
    Generate,
    /// Run a Monte Carlo grid and optionally fit a scaling exponent.
    Benchmark,
    /// Run the numerical verification suites.
    Verify,
    /// Solve one testing-program instance.
    SolveMt,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

pub const EXIT_CHECKS_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_NONCONVERGENCE: i32 = 4;
pub const EXIT_ESTIMATOR: i32 = 5;

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError { code: EXIT_CONFIG, kind: "config", message: message.into() }
    }

    /// Errors while reading input data rather than configuration.
    pub fn input(err: Error) -> Self {
        match err {
            Error::Io(_) | Error::Parse(_) | Error::InvalidSample(_) => {
                CliError { code: EXIT_IO, kind: "input", message: err.to_string() }
            }
            other => other.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        let (code, kind) = match &err {
            Error::InvalidConfig(_) => (EXIT_CONFIG, "invalid_config"),
            Error::Parse(_) => (EXIT_CONFIG, "parse"),
            Error::DegenerateGrid(_) => (EXIT_CONFIG, "degenerate_grid"),
            Error::Domain(_) => (EXIT_CONFIG, "domain"),
            Error::MassOverflow { .. } => (EXIT_CONFIG, "mass_overflow"),
            Error::DimensionGuard { .. } => (EXIT_CONFIG, "dimension_guard"),
            Error::EnumerationGuard { .. } => (EXIT_CONFIG, "enumeration_guard"),
            Error::Io(_) => (EXIT_IO, "io"),
            Error::NonConvergence { .. } => (EXIT_NONCONVERGENCE, "non_convergence"),
            Error::InvalidSample(_) => (EXIT_ESTIMATOR, "invalid_sample"),
            Error::EmptySample(_) => (EXIT_ESTIMATOR, "empty_sample"),
            Error::EmptyAfterPrune { .. } => (EXIT_ESTIMATOR, "empty_after_prune"),
        };
        CliError { code, kind, message: err.to_string() }
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: &'a str,
    exit_code: i32,
}

#[derive(Serialize)]
struct ErrorDoc<'a> {
    error: ErrorBody<'a>,
}

impl CliError {
    pub fn to_json(&self) -> String {
        let doc = ErrorDoc { error: ErrorBody { kind: self.kind, message: &self.message, exit_code: self.code } };
        serde_json::to_string(&doc).unwrap_or_else(|_| format!("{{\"error\":{{\"exit_code\":{}}}}}", self.code))
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.code
        }
    }
}

/// Runs a parsed command inside a worker pool of `--jobs` threads.
pub fn execute(cli: &Cli) -> Result<i32, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| CliError::config(format!("cannot build worker pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Estimate => commands::estimate(cli),
        Command::Generate => commands::generate(cli),
        Command::Benchmark => commands::benchmark(cli),
        Command::Verify => commands::verify(cli),
        Command::SolveMt => commands::solve_mt(cli),
    })
}
