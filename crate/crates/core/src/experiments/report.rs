use std::fmt;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::io::{write_atomic, write_image};

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(u64),
    Float(f64),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Text(s) => f.write_str(s),
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Float(v) => write!(f, "{v:?}"),
        }
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

/// Result table of one experiment plus the files it emits.
///
/// Floats are written with round-trip precision, so `report.csv` is
/// byte-identical across reruns with the same configuration.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentReport {
    pub name: String,
    /// Flat `key=value` snapshot written to `config.txt`.
    pub config: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Extra CSV files by file name, such as per-run metric histories.
    pub tables: Vec<(String, String)>,
    /// Sample images by file name.
    pub images: Vec<(String, Image)>,
}

impl ExperimentReport {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        ExperimentReport {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            ..Default::default()
        }
    }

    pub fn push_row(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::shape(format!(
                "report row has {} cells, expected {}",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn cell(&self, row: usize, column: &str) -> Option<&Cell> {
        self.rows.get(row)?.get(self.column(column)?)
    }

    /// Numeric value of a cell; integers are widened.
    pub fn float(&self, row: usize, column: &str) -> Option<f64> {
        match self.cell(row, column)? {
            Cell::Float(v) => Some(*v),
            Cell::Int(v) => Some(*v as f64),
            Cell::Text(_) => None,
        }
    }

    pub fn text(&self, row: usize, column: &str) -> Option<String> {
        self.cell(row, column).map(|c| c.to_string())
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| c.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn config_text(&self) -> String {
        let mut out = format!("experiment={}\n", self.name);
        for (k, v) in &self.config {
            out.push_str(&format!("{k}={v}\n"));
        }
        out
    }

    /// Writes `report.csv`, `config.txt`, the extra tables and the images
    /// into `dir`, returning every path written.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut written = Vec::new();
        let mut put = |name: &str, bytes: &[u8]| -> Result<()> {
            let path = dir.join(name);
            write_atomic(&path, bytes)?;
            written.push(path);
            Ok(())
        };
        put("report.csv", self.to_csv().as_bytes())?;
        put("config.txt", self.config_text().as_bytes())?;
        for (name, text) in &self.tables {
            put(name, text.as_bytes())?;
        }
        for (name, image) in &self.images {
            let path = dir.join(name);
            write_image(&path, image)?;
            written.push(path);
        }
        Ok(written)
    }
}
