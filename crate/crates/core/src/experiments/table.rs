use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{RunConfig, SCHEMA_VERSION};
use crate::dynamics::fmt_f64;
use crate::Result;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    F(f64),
    U(u64),
    B(bool),
    S(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(v) => fmt_f64(*v),
            Cell::U(v) => v.to_string(),
            Cell::B(v) => v.to_string(),
            Cell::S(v) => v.clone(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::F(v) => Some(*v),
            Cell::U(v) => Some(*v as f64),
            _ => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::U(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::U(v as u64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::B(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.to_string())
    }
}

/// A named output table with a fixed column order.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Extra metadata for the JSON sidecar.
    pub meta: serde_json::Value,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            meta: serde_json::Value::Null,
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width of table {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r[k]).collect())
    }

    /// Numeric column; non-numeric cells are `NaN`.
    pub fn column_f64(&self, name: &str) -> Option<Vec<f64>> {
        Some(self.column(name)?.into_iter().map(|c| c.as_f64().unwrap_or(f64::NAN)).collect())
    }

    /// CSV with a leading `# config: <json>` line and a header row.
    pub fn write_csv(&self, config_json: &str, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "# config: {config_json}")?;
        writeln!(out, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::render).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct Sidecar<'a> {
    schema_version: u32,
    table: &'a str,
    columns: &'a [String],
    rows: usize,
    config: &'a RunConfig,
    meta: &'a serde_json::Value,
}

/// Writes every table as `<name>.csv` plus a `<name>.json` sidecar into
/// `dir`, created if needed. Nothing is written for an empty list.
pub fn write_tables(dir: &Path, cfg: &RunConfig, tables: &[Table]) -> Result<Vec<PathBuf>> {
    if tables.is_empty() {
        return Ok(Vec::new());
    }
    std::fs::create_dir_all(dir)?;
    let json = cfg.to_json();
    let mut written = Vec::new();
    for t in tables {
        let csv = dir.join(format!("{}.csv", t.name));
        let mut out = std::io::BufWriter::new(std::fs::File::create(&csv)?);
        t.write_csv(&json, &mut out)?;
        out.flush()?;
        let sidecar = Sidecar {
            schema_version: SCHEMA_VERSION,
            table: &t.name,
            columns: &t.columns,
            rows: t.rows.len(),
            config: cfg,
            meta: &t.meta,
        };
        let side = dir.join(format!("{}.json", t.name));
        std::fs::write(&side, serde_json::to_string_pretty(&sidecar).expect("sidecar serializes") + "\n")?;
        written.push(csv);
        written.push(side);
    }
    Ok(written)
}

/// File-name fragment for a grid value, e.g. `2.5` or `20`.
pub fn tag(v: f64) -> String {
    format!("{v}")
}
