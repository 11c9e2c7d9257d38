//! Deterministic CSV output: `#`-prefixed metadata lines, a header row, and
//! data rows with 9 significant digits. Identical inputs produce
//! byte-identical files.

use crate::error::Result;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OutputTable {
    pub metadata: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Canonical numeric cell: 9 significant digits, scientific notation.
pub fn format_value(x: f64) -> String {
    format!("{x:.8e}")
}

impl OutputTable {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            ..Self::default()
        }
    }

    pub fn meta(&mut self, key: &str, value: impl Into<String>) {
        self.metadata.push((key.to_string(), value.into()));
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Write to `path`, or to stdout when `path` is `None`.
    pub fn write(&self, path: Option<&Path>) -> Result<()> {
        let csv = self.to_csv();
        match path {
            Some(p) => std::fs::write(p, csv)?,
            None => std::io::stdout().write_all(csv.as_bytes())?,
        }
        Ok(())
    }
}
