//! Self-describing reports: every CSV and JSON output carries the tool
//! version, command, config hash and master seed, and nothing that varies
//! between runs.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// SHA-256 of the configuration's JSON serialization.
pub fn config_hash(config: &ExperimentConfig) -> String {
    let text = serde_json::to_string(config).expect("config serializes");
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Locale-independent float formatting (shortest round-trip form).
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x}")
    }
}

pub fn opt<T: ToString>(x: Option<T>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

pub struct Report {
    pub command: String,
    pub config: ExperimentConfig,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub results: serde_json::Value,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config_hash: String,
    master_seed: u64,
    config: &'a ExperimentConfig,
    results: &'a serde_json::Value,
}

impl Report {
    pub fn new(command: &str, config: &ExperimentConfig, columns: &[&str]) -> Self {
        Report {
            command: command.to_string(),
            config: config.clone(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            results: serde_json::Value::Null,
        }
    }

    pub fn row(&mut self, fields: Vec<String>) {
        debug_assert_eq!(fields.len(), self.columns.len());
        self.rows.push(fields);
    }

    pub fn header_line(&self) -> String {
        format!(
            "# fpplab {VERSION} command={} config_hash={} master_seed={}\n",
            self.command,
            config_hash(&self.config),
            self.config.master_seed
        )
    }

    pub fn render_csv(&self) -> Result<String, CliError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let body = String::from_utf8(w.into_inner().map_err(|e| CliError::Io(e.into_error()))?)
            .expect("csv output is utf-8");
        Ok(self.header_line() + &body)
    }

    pub fn render_json(&self) -> String {
        let r = JsonReport {
            tool: "fpplab",
            version: VERSION,
            command: &self.command,
            config_hash: config_hash(&self.config),
            master_seed: self.config.master_seed,
            config: &self.config,
            results: &self.results,
        };
        serde_json::to_string_pretty(&r).expect("report serializes") + "\n"
    }

    /// Writes `<command>.csv` and `<command>.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf), CliError> {
        std::fs::create_dir_all(dir)?;
        let csv_path = dir.join(format!("{}.csv", self.command));
        let json_path = dir.join(format!("{}.json", self.command));
        std::fs::write(&csv_path, self.render_csv()?)?;
        std::fs::write(&json_path, self.render_json())?;
        Ok((csv_path, json_path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_tracks_config() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        assert_eq!(config_hash(&a), config_hash(&b));
        b.master_seed = 1;
        assert_ne!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
    }

    #[test]
    fn csv_layout() {
        let mut r = Report::new("flow", &ExperimentConfig::default(), &["x", "y"]);
        r.row(vec![num(0.1), num(f64::INFINITY)]);
        let text = r.render_csv().unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# fpplab "));
        assert_eq!(&lines[1..], ["x,y", "0.1,inf"]);
    }
}
