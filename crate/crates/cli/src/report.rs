//! Report emission: schema-versioned JSON and a flat CSV summary.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::suite::{Report, SCHEMA_VERSION};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    CsvSummary,
}

pub const REPORT_FILE: &str = "report.json";
pub const SUMMARY_FILE: &str = "summary.csv";

/// One CSV line: a relation check or one Bethe equation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub kind: String,
    pub name: String,
    pub parameters: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn summary_rows(report: &Report) -> Vec<SummaryRow> {
    let mut rows: Vec<SummaryRow> = report
        .relations
        .iter()
        .map(|r| SummaryRow {
            kind: "relation".into(),
            name: r.relation.clone(),
            parameters: r.parameters.clone(),
            residual: r.residual,
            tolerance: r.tolerance,
            pass: r.pass,
        })
        .collect();
    let tol = report.config.tolerances.bethe;
    rows.extend(report.bae.iter().map(|b| SummaryRow {
        kind: "bethe".into(),
        name: format!("level {}", b.level),
        parameters: format!("path={:?} root={} z={}", b.path, b.root_index, b.root),
        residual: b.residual,
        tolerance: tol,
        pass: b.residual < tol,
    }));
    rows
}

pub fn to_json(report: &Report) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}

/// Parses a JSON report and checks the fields a consumer relies on.
pub fn validate_report_json(text: &str) -> Result<Report, CliError> {
    let report: Report = serde_json::from_str(text).map_err(|e| CliError::Config(format!("malformed report: {e}")))?;
    if report.schema_version != SCHEMA_VERSION {
        return Err(CliError::Config(format!(
            "report schema version {} (expected {SCHEMA_VERSION})",
            report.schema_version
        )));
    }
    if report.passed != (report.failures() == 0) {
        return Err(CliError::Config("report pass flag disagrees with its entries".into()));
    }
    Ok(report)
}

/// Writes the requested files into `dir`, creating it if needed.
pub fn emit_report(report: &Report, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut written = Vec::new();
    for format in formats {
        match format {
            Format::Json => {
                let path = dir.join(REPORT_FILE);
                fs::write(&path, to_json(report)).map_err(|e| CliError::io(&path, e))?;
                written.push(path);
            }
            Format::CsvSummary => {
                let path = dir.join(SUMMARY_FILE);
                let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::io(&path, e))?;
                for row in summary_rows(report) {
                    w.serialize(row).map_err(|e| CliError::io(&path, e))?;
                }
                w.flush().map_err(|e| CliError::io(&path, e))?;
                written.push(path);
            }
        }
    }
    Ok(written)
}
