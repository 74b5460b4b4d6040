//! Scenario engine and report emission for the folquot toolkit.

pub mod engine;
pub mod expr;
pub mod report;
pub mod scenario;
pub mod value;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("expression error: {0}")]
    Expr(String),

    #[error("step `{id}` failed: {message}")]
    Step { id: String, message: String },

    #[error("unknown format `{0}` (use text or json)")]
    UnknownFormat(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("io error: {0}")]
    Io(String),
}

pub use engine::run_scenario;
pub use report::{emit_report, Format, Report, Row, Status};
pub use scenario::{corpus_lookup, parse_scenario, ScenarioDoc, CORPUS};
