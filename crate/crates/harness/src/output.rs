//! Plot-ready tables and their CSV/JSON emission.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::Result;

/// Columns appended to every emitted row.
pub const META_COLUMNS: [&str; 3] = ["seed", "config_hash", "version"];

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "row width of table {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// CSV bytes with the metadata columns appended.
    pub fn to_csv(&self, meta: &Meta) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header: Vec<&str> = self.columns.iter().map(String::as_str).chain(META_COLUMNS).collect();
        w.write_record(&header)?;
        let seed = meta.seed.to_string();
        for row in &self.rows {
            let tail = [seed.as_str(), meta.config_hash.as_str(), meta.version.as_str()];
            w.write_record(row.iter().map(String::as_str).chain(tail))?;
        }
        w.into_inner().map_err(|e| crate::error::HarnessError::Io(e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Meta {
    pub experiment: String,
    pub seed: u64,
    pub config_hash: String,
    pub version: String,
    pub generator: String,
}

impl Meta {
    pub fn for_config(cfg: &ExperimentConfig) -> Self {
        Self {
            experiment: cfg.id.to_string(),
            seed: cfg.seed,
            config_hash: cfg.hash(),
            version: tsiv::VERSION.to_string(),
            generator: tsiv::rng::GENERATOR.to_string(),
        }
    }
}

/// Result of one experiment: tables plus a JSON summary.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub meta: Meta,
    pub tables: Vec<Table>,
    pub summary: serde_json::Value,
}

impl Report {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn summary_json(&self) -> String {
        let doc = serde_json::json!({ "meta": self.meta, "summary": self.summary });
        serde_json::to_string_pretty(&doc).expect("summary serializes") + "\n"
    }

    /// Write `<experiment>_<table>.csv` per table and
    /// `<experiment>_summary.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for t in &self.tables {
            let path = dir.join(format!("{}_{}.csv", self.meta.experiment, t.name));
            fs::write(&path, t.to_csv(&self.meta)?)?;
            written.push(path);
        }
        let path = dir.join(format!("{}_summary.json", self.meta.experiment));
        fs::write(&path, self.summary_json())?;
        written.push(path);
        Ok(written)
    }
}

/// Shortest round-trip text; scientific notation outside `[1e-4, 1e15)`.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if v != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// JSON number, or a string for non-finite values.
pub fn json_num(v: f64) -> serde_json::Value {
    serde_json::Number::from_f64(v).map(serde_json::Value::Number).unwrap_or_else(|| serde_json::Value::String(num(v)))
}
