use std::fs;
use std::io::Write;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::Value;
use submeasure_lab::{AtomSet, Exact};

use crate::config::{Command, Format, RunConfig};
use crate::CliError;

/// Rows of strings under a fixed header.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(io)?;
        for row in &self.rows {
            w.write_record(row).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
    }
}

fn io(e: impl std::fmt::Display) -> CliError {
    CliError::Io(e.to_string())
}

/// The outcome of one subcommand: a JSON result and a plot-ready table.
#[derive(Clone, Debug)]
pub struct Report {
    pub command: Command,
    pub result: Value,
    pub table: Table,
}

#[derive(Serialize)]
struct Envelope<'a> {
    command: &'static str,
    version: &'static str,
    result: &'a Value,
}

impl Report {
    pub fn new(command: Command, result: impl Serialize, table: Table) -> Result<Self, CliError> {
        let result = serde_json::to_value(result).map_err(io)?;
        Ok(Report { command, result, table })
    }

    pub fn to_json(&self) -> Result<String, CliError> {
        let env = Envelope { command: self.command.name(), version: env!("CARGO_PKG_VERSION"), result: &self.result };
        let mut s = serde_json::to_string_pretty(&env).map_err(io)?;
        s.push('\n');
        Ok(s)
    }
}

/// Writes `<out>/<command>.json` (and `.csv` with `--format csv`), or prints
/// the requested format when there is no output directory.
pub fn emit(config: &RunConfig, report: &Report) -> Result<Vec<PathBuf>, CliError> {
    let Some(dir) = &config.out else {
        let text = match config.format {
            Format::Json => report.to_json()?,
            Format::Csv => report.table.to_csv()?,
        };
        std::io::stdout().lock().write_all(text.as_bytes()).map_err(io)?;
        return Ok(Vec::new());
    };
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut written = Vec::new();
    let json = dir.join(format!("{}.json", report.command.name()));
    fs::write(&json, report.to_json()?).map_err(|e| CliError::Io(format!("{}: {e}", json.display())))?;
    written.push(json);
    if config.format == Format::Csv {
        let csv = dir.join(format!("{}.csv", report.command.name()));
        fs::write(&csv, report.table.to_csv()?).map_err(|e| CliError::Io(format!("{}: {e}", csv.display())))?;
        written.push(csv);
    }
    Ok(written)
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

pub fn fmt_exact(x: &Exact) -> String {
    x.to_string()
}

pub fn fmt_set(s: AtomSet) -> String {
    s.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn fmt_opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}
