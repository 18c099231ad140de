//! CSV and JSON emission with a fixed, locale-free number format.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::params::ParameterSet;

/// Scientific notation with nine significant digits.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.8e}")
    }
}

/// Rectangular table with named columns. Cells are numbers or short tags.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Table { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }

    /// Numeric column; text cells map to NaN.
    pub fn numbers(&self, name: &str) -> Option<Vec<f64>> {
        Some(
            self.column(name)?
                .into_iter()
                .map(|c| match c {
                    Cell::Num(x) => *x,
                    Cell::Text(_) => f64::NAN,
                })
                .collect(),
        )
    }

    /// CSV text. `comment` becomes a leading `# ...` line when given.
    pub fn to_csv(&self, comment: Option<&str>) -> String {
        let mut out = String::new();
        if let Some(c) = comment {
            let _ = writeln!(out, "# {c}");
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(x) => format_number(*x),
                    Cell::Text(s) => s.clone(),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Sidecar document: the exact parameters, their derived constants and any
/// extra metadata.
pub fn sidecar(p: &ParameterSet, extra: Value) -> Value {
    let derived = p.derive().ok().map(|d| serde_json::to_value(d).unwrap_or(Value::Null));
    json!({
        "parameters": p.to_json_value(),
        "derived": derived,
        "meta": extra,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::config(format!("cannot create {}: {e}", dir.display())))?;
        }
    }
    std::fs::write(path, text).map_err(|e| Error::config(format!("cannot write {}: {e}", path.display())))
}

pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    write_text(path, &(text + "\n"))
}
