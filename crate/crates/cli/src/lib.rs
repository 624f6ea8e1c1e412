//! Command-line front end for `submeasure-lab`: flags become a [`RunConfig`],
//! [`run`] executes one subcommand and writes its report.

mod commands;
mod config;
mod output;

use std::ffi::OsString;
use std::fmt;

use clap::Parser;
use submeasure_lab::Error;

pub use commands::dispatch;
pub use config::{Cli, Command, Format, Limits, RunConfig, DEFAULT_MAX_TRIALS, HARD_MAX_TRIALS};
pub use output::{emit, Report, Table};

pub const EXIT_OK: i32 = 0;
/// I/O failures while writing reports.
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_LIMIT: i32 = 3;

/// Caps the worker threads used for parallel sweeps and Monte Carlo runs.
pub const THREADS_ENV: &str = "SUBMEASURE_LAB_THREADS";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    Validation(String),
    Limit(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Limit(_) => EXIT_LIMIT,
            CliError::Io(_) => EXIT_FAILURE,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Limit(m) => write!(f, "limit exceeded: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::LimitExceeded { .. } | Error::SearchExhausted(_) => CliError::Limit(e.to_string()),
            Error::Invalid(_) | Error::Uncoverable => CliError::Validation(e.to_string()),
        }
    }
}

fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(raw) = std::env::var_os(THREADS_ENV) {
        let threads = raw
            .to_str()
            .and_then(|s| s.trim().parse::<usize>().ok())
            .filter(|&n| n >= 1)
            .ok_or_else(|| CliError::Validation(format!("{THREADS_ENV} must be a positive integer")))?;
        builder = builder.num_threads(threads);
    }
    builder.build().map_err(|e| CliError::Io(e.to_string()))
}

/// Runs one subcommand and writes its report; returns the exit code.
pub fn run(config: &RunConfig) -> i32 {
    let outcome = thread_pool().and_then(|pool| pool.install(|| dispatch(config))).and_then(|report| emit(config, &report));
    match outcome {
        Ok(paths) => {
            for p in paths {
                eprintln!("wrote {}", p.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Parses `args` (program name first) and runs; usage errors exit with 2.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    match RunConfig::from_cli(cli) {
        Ok(config) => run(&config),
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
