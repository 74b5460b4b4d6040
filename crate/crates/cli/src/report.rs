//! Report assembly and emission.
//!
//! The machine (JSON) form is byte-deterministic: sorted keys, no
//! insignificant whitespace, and no timing fields. Wall-clock per step only
//! appears in the human text form.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
    Info,
    Skipped,
}

impl Status {
    pub fn label(&self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::Inconclusive => "inconclusive",
            Status::Info => "info",
            Status::Skipped => "skipped",
        }
    }
}

/// One report row: either a step outcome or an expectation on a step field.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Row {
    pub step: String,
    pub op: String,
    pub value: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub expected: Option<String>,
    pub status: Status,
    /// wall-clock in microseconds; text-only, never serialized
    #[serde(skip, default)]
    pub micros: u128,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub scenario: String,
    pub source: String,
    pub params: BTreeMap<String, String>,
    pub rows: Vec<Row>,
    pub overall: String,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.overall == "pass"
    }

    pub fn finalize(&mut self) {
        let failed = self.rows.iter().any(|r| r.status == Status::Fail);
        self.overall = if failed { "fail".to_string() } else { "pass".to_string() };
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
}

impl std::str::FromStr for Format {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "text" => Ok(Format::Text),
            "json" => Ok(Format::Json),
            other => Err(CliError::UnknownFormat(other.to_string())),
        }
    }
}

/// Renders a report. JSON output is canonical: keys sorted, compact.
pub fn emit_report(report: &Report, format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => {
            let value = serde_json::to_value(report)
                .map_err(|e| CliError::Schema(format!("report serialization: {e}")))?;
            serde_json::to_string(&value)
                .map_err(|e| CliError::Schema(format!("report serialization: {e}")))
        }
        Format::Text => {
            let mut out = String::new();
            out.push_str(&format!("scenario: {}\n", report.scenario));
            out.push_str(&format!("source:   {}\n", report.source));
            let params: Vec<String> =
                report.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            out.push_str(&format!("params:   {}\n", params.join(" ")));
            out.push('\n');
            for row in &report.rows {
                let head = format!("[{:^12}] {}", row.status.label(), row.step);
                match &row.expected {
                    Some(exp) => {
                        out.push_str(&format!(
                            "{head}: {} (expected {}) [{} us]\n",
                            row.value, exp, row.micros
                        ));
                    }
                    None => {
                        out.push_str(&format!("{head}: {} [{} us]\n", row.value, row.micros));
                    }
                }
            }
            out.push('\n');
            out.push_str(&format!("overall: {}\n", report.overall));
            Ok(out)
        }
    }
}
