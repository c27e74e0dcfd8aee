use std::io::Write;
use std::path::{Path, PathBuf};

use qgsp_core::circuit::QueryLedger;
use serde_json::Value;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(CliError::usage(format!(
                "unknown format `{other}` (json or csv)"
            ))),
        }
    }
}

/// Rows for CSV output.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    /// One row of `key,value` pairs taken from the scalar fields of `v`.
    pub fn from_scalars(v: &Value) -> Self {
        let mut t = Table::new(&["key", "value"]);
        if let Value::Object(map) = v {
            for (k, x) in map {
                match x {
                    Value::Number(_) | Value::Bool(_) | Value::String(_) => {
                        t.push(vec![k.clone(), scalar(x)]);
                    }
                    _ => {}
                }
            }
        }
        t
    }

    fn render(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// What a subcommand produced.
pub struct Report {
    /// Full result; must already contain the ledger under `"ledger"`.
    pub json: Value,
    pub table: Table,
    pub ledger: QueryLedger,
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".ledger.json");
    PathBuf::from(s)
}

/// Writes the report. CSV files get the ledger in a `<out>.ledger.json`
/// sidecar; CSV on stdout ends with a `# ledger:` comment line.
pub fn emit(report: &Report, format: Format, out: Option<&Path>) -> Result<(), CliError> {
    let ledger_json = serde_json::to_string_pretty(&report.ledger)? + "\n";
    match (format, out) {
        (Format::Json, Some(p)) => {
            std::fs::write(p, serde_json::to_string_pretty(&report.json)? + "\n")?;
        }
        (Format::Json, None) => {
            println!("{}", serde_json::to_string_pretty(&report.json)?);
        }
        (Format::Csv, Some(p)) => {
            std::fs::write(p, report.table.render())?;
            std::fs::write(sidecar(p), ledger_json)?;
        }
        (Format::Csv, None) => {
            let mut o = std::io::stdout().lock();
            o.write_all(report.table.render().as_bytes())?;
            writeln!(o, "# ledger: {}", serde_json::to_string(&report.ledger)?)?;
        }
    }
    Ok(())
}

/// `f64` as CSV text: shortest round-trip form, `.` decimal separator.
pub fn num(x: f64) -> String {
    format!("{x}")
}
