//! Versioned JSON envelope and CSV with commented metadata.

use std::io::Write;

use serde::Serialize;
use serde_json::json;

use crate::config::{Format, RunConfig};
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Results of one subcommand in both output shapes.
pub struct Report {
    pub json: serde_json::Value,
    pub csv_header: String,
    pub csv_rows: Vec<String>,
}

impl Report {
    pub fn new<T: Serialize>(results: &T, csv_header: &str, csv_rows: Vec<String>) -> Result<Self, CliError> {
        let json = serde_json::to_value(results).map_err(|e| CliError::Io(e.to_string()))?;
        Ok(Self { json, csv_header: csv_header.to_string(), csv_rows })
    }
}

fn metadata(cfg: &RunConfig, seconds: f64) -> serde_json::Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "tool": "robinhom",
        "versions": { "cli": env!("CARGO_PKG_VERSION"), "core": robinhom_core::VERSION },
        "config": cfg,
        "timings": { "total_seconds": seconds },
    })
}

pub fn render(cfg: &RunConfig, report: &Report, seconds: f64) -> Result<String, CliError> {
    let meta = metadata(cfg, seconds);
    match cfg.format {
        Format::Json => {
            let mut doc = meta;
            doc["results"] = report.json.clone();
            serde_json::to_string_pretty(&doc).map(|s| s + "\n").map_err(|e| CliError::Io(e.to_string()))
        }
        Format::Csv => {
            let mut out = String::new();
            out.push_str(&format!("# robinhom schema {SCHEMA_VERSION}, cli {}, core {}\n", env!("CARGO_PKG_VERSION"), robinhom_core::VERSION));
            out.push_str(&format!("# config: {}\n", serde_json::to_string(cfg).map_err(|e| CliError::Io(e.to_string()))?));
            out.push_str(&format!("# total_seconds: {seconds:.3}\n"));
            out.push_str(&report.csv_header);
            out.push('\n');
            for row in &report.csv_rows {
                out.push_str(row);
                out.push('\n');
            }
            Ok(out)
        }
    }
}

pub fn emit(cfg: &RunConfig, text: &str) -> Result<(), CliError> {
    match &cfg.output {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string())),
    }
}

pub fn write_json<T: Serialize>(path: &std::path::Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string(value).map_err(|e| CliError::Io(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
