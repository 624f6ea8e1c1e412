use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use submeasure_lab::algebra::MAX_ATOMS;
use submeasure_lab::covnum::SWEEP_LIMIT;
use submeasure_lab::exact::parse_ratio;
use submeasure_lab::Exact;

use crate::CliError;

/// Default cap on Monte Carlo trials and sampled sets.
pub const DEFAULT_MAX_TRIALS: u64 = 10_000_000;
/// `--max-trials` may not go beyond this.
pub const HARD_MAX_TRIALS: u64 = 1_000_000_000;

#[derive(Parser, Debug)]
#[command(name = "submeasure-lab", version, about = "Covering numbers, submeasure classification and concentration experiments on finite algebras")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// JSON input document.
    #[arg(long, global = true, value_name = "PATH")]
    pub input: Option<PathBuf>,

    /// Directory for report files; reports go to stdout when absent.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Seed for every random stream (overrides the document).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// `json` writes the report only; `csv` also writes the table.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Monte Carlo trials, or sampled sets for `example-easy`.
    #[arg(long, global = true)]
    pub trials: Option<u64>,

    /// Comma-separated rationals, strictly decreasing, e.g. `1/2,1/4,1/8`.
    #[arg(long, global = true, value_name = "LIST")]
    pub xi_grid: Option<String>,

    /// Comma-separated positive rationals.
    #[arg(long, global = true, value_name = "LIST")]
    pub epsilon: Option<String>,

    /// Truncation depth for `example-easy`, number of levels for `example-pathological`.
    #[arg(long, global = true)]
    pub depth: Option<usize>,

    /// Largest ground set accepted.
    #[arg(long, global = true)]
    pub max_atoms: Option<usize>,

    /// Largest ground set swept over all subsets for `h_φ`.
    #[arg(long, global = true)]
    pub max_sweep: Option<usize>,

    /// Largest number of trials or sampled sets.
    #[arg(long, global = true)]
    pub max_trials: Option<u64>,
}

#[derive(Subcommand, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    /// Covering number of a set family, with primal and dual certificates.
    Covnum,
    /// h_φ(ξ) over a grid.
    Hphi,
    /// Elliptic / parabolic / hyperbolic evidence from h_φ on a grid.
    Classify,
    /// Largest mass of a measure below φ.
    Pathology,
    /// Distances between pairs of product points.
    Dist,
    /// Shearer, Ledoux and Herbst checks on tabulated functions.
    EntropyCheck,
    /// Monte Carlo tails and concentration functions.
    Concentrate,
    /// Concentration along a refining chain of partitions.
    Probe,
    /// Truncations of the parabolic example.
    ExampleEasy,
    /// Berry–Esseen parameters and the tree claim of the pathological example.
    ExamplePathological,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Covnum => "covnum",
            Command::Hphi => "hphi",
            Command::Classify => "classify",
            Command::Pathology => "pathology",
            Command::Dist => "dist",
            Command::EntropyCheck => "entropy-check",
            Command::Concentrate => "concentrate",
            Command::Probe => "probe",
            Command::ExampleEasy => "example-easy",
            Command::ExamplePathological => "example-pathological",
        }
    }

    pub const ALL: [Command; 10] = [
        Command::Covnum,
        Command::Hphi,
        Command::Classify,
        Command::Pathology,
        Command::Dist,
        Command::EntropyCheck,
        Command::Concentrate,
        Command::Probe,
        Command::ExampleEasy,
        Command::ExamplePathological,
    ];
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_atoms: usize,
    pub max_sweep: usize,
    pub max_trials: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_atoms: MAX_ATOMS, max_sweep: SWEEP_LIMIT, max_trials: DEFAULT_MAX_TRIALS }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub format: Format,
    pub trials: Option<u64>,
    pub xi_grid: Option<Vec<Exact>>,
    pub epsilon: Option<Vec<Exact>>,
    pub depth: Option<usize>,
    pub limits: Limits,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            input: None,
            out: None,
            seed: None,
            format: Format::Json,
            trials: None,
            xi_grid: None,
            epsilon: None,
            depth: None,
            limits: Limits::default(),
        }
    }

    pub fn from_cli(cli: Cli) -> Result<Self, CliError> {
        let defaults = Limits::default();
        let limits = Limits {
            max_atoms: cli.max_atoms.unwrap_or(defaults.max_atoms),
            max_sweep: cli.max_sweep.unwrap_or(defaults.max_sweep),
            max_trials: cli.max_trials.unwrap_or(defaults.max_trials),
        };
        let config = RunConfig {
            command: cli.command,
            input: cli.input,
            out: cli.out,
            seed: cli.seed,
            format: cli.format,
            trials: cli.trials,
            xi_grid: cli.xi_grid.as_deref().map(|s| parse_list("--xi-grid", s)).transpose()?,
            epsilon: cli.epsilon.as_deref().map(|s| parse_list("--epsilon", s)).transpose()?,
            depth: cli.depth,
            limits,
        };
        config.validate()?;
        Ok(config)
    }

    /// Caps must lie within what the library can handle.
    pub fn validate(&self) -> Result<(), CliError> {
        let l = &self.limits;
        if !(1..=MAX_ATOMS).contains(&l.max_atoms) {
            return Err(CliError::Validation(format!("--max-atoms must be between 1 and {MAX_ATOMS}")));
        }
        if !(1..=SWEEP_LIMIT).contains(&l.max_sweep) {
            return Err(CliError::Validation(format!("--max-sweep must be between 1 and {SWEEP_LIMIT}")));
        }
        if !(1..=HARD_MAX_TRIALS).contains(&l.max_trials) {
            return Err(CliError::Validation(format!("--max-trials must be between 1 and {HARD_MAX_TRIALS}")));
        }
        if let Some(input) = &self.input {
            if !input.is_file() {
                return Err(CliError::Validation(format!("input {} is not a readable file", input.display())));
            }
        }
        if let Some(out) = &self.out {
            if out.exists() && !out.is_dir() {
                return Err(CliError::Validation(format!("output {} exists and is not a directory", out.display())));
            }
        }
        Ok(())
    }
}

fn parse_list(flag: &str, s: &str) -> Result<Vec<Exact>, CliError> {
    s.split(',')
        .map(|part| {
            parse_ratio(part.trim())
                .map(Exact::rational)
                .map_err(|e| CliError::Validation(format!("{flag}: {e}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("submeasure-lab").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_after_subcommand() {
        let c = RunConfig::from_cli(cli(&["classify", "--xi-grid", "1/2, 1/4", "--format", "csv", "--seed", "9"])).unwrap();
        assert_eq!(c.command, Command::Classify);
        assert_eq!(c.xi_grid, Some(vec![Exact::ratio(1, 2), Exact::ratio(1, 4)]));
        assert_eq!(c.format, Format::Csv);
        assert_eq!(c.seed, Some(9));
        assert_eq!(c.limits, Limits::default());
    }

    #[test]
    fn bad_values() {
        assert!(matches!(RunConfig::from_cli(cli(&["hphi", "--xi-grid", "1/2,x"])), Err(CliError::Validation(_))));
        assert!(matches!(RunConfig::from_cli(cli(&["hphi", "--max-sweep", "17"])), Err(CliError::Validation(_))));
        assert!(matches!(RunConfig::from_cli(cli(&["hphi", "--max-atoms", "0"])), Err(CliError::Validation(_))));
        assert!(Cli::try_parse_from(["submeasure-lab", "frobnicate"]).is_err());
    }

    #[test]
    fn names_match_clap() {
        for c in Command::ALL {
            let parsed = Cli::try_parse_from(["submeasure-lab", c.name()]).unwrap();
            assert_eq!(parsed.command, c);
        }
    }
}
