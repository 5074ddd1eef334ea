// Copyright 2026 The ionmux Authors
// SPDX-License-Identifier: Apache-2.0

//! CSV data files and the JSON run summary.
//!
//! Every CSV starts with `#` comment lines naming the tool version, scenario,
//! experiment, seed and config hash, then one header row and the data rows.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub scenario: String,
    pub experiment: String,
    pub seed: Option<u64>,
    pub config_sha256: String,
}

/// A table destined for one CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(file: &str, columns: &[&str]) -> Self {
        Self { file: file.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn push_f64(&mut self, row: &[f64]) {
        self.push(row.iter().map(|v| num(*v)).collect());
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_table(dir: &Path, prov: &Provenance, table: &Table) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(&table.file);
    let mut f = fs::File::create(&path)?;
    writeln!(f, "# ionmux {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(f, "# scenario: {}", prov.scenario)?;
    writeln!(f, "# experiment: {}", prov.experiment)?;
    match prov.seed {
        Some(s) => writeln!(f, "# seed: {s}")?,
        None => writeln!(f, "# seed: none")?,
    }
    writeln!(f, "# config_sha256: {}", prov.config_sha256)?;
    let mut w = csv::Writer::from_writer(f);
    w.write_record(&table.columns)?;
    for r in &table.rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(path)
}

/// Reads back the data rows of a CSV written by [`write_table`], skipping
/// comment lines and the header.
pub fn read_rows(path: &Path) -> Result<Vec<Vec<String>>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    r.records().map(|rec| Ok(rec?.iter().map(String::from).collect())).collect()
}

pub fn write_summary(dir: &Path, value: &serde_json::Value) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join("summary.json");
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(&path, text)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_comment_header_and_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let prov = Provenance { scenario: "s".into(), experiment: "e".into(), seed: Some(7), config_sha256: "ab".into() };
        let mut t = Table::new("x.csv", &["a", "b"]);
        t.push_f64(&[0.1, -2.5e-9]);
        t.push(vec!["label, with comma".into(), num(3.0)]);
        let p = write_table(dir.path(), &prov, &t).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("# ionmux "));
        assert!(text.contains("# seed: 7\n# config_sha256: ab\na,b\n"));
        let rows = read_rows(&p).unwrap();
        assert_eq!(rows, t.rows);
        assert_eq!(rows[0][1].parse::<f64>().unwrap(), -2.5e-9);
    }
}
