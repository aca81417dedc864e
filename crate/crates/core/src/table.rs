//! Rectangular numeric tables with per-column units, written as CSV.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Column {
    pub name: String,
    pub unit: String,
}

impl Column {
    pub fn new(name: impl Into<String>, unit: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            unit: unit.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveTable {
    columns: Vec<Column>,
    rows: Vec<Vec<f64>>,
    metadata: Vec<(String, String)>,
}

impl CurveTable {
    pub fn new(columns: Vec<Column>) -> Self {
        let mut table = Self {
            columns,
            rows: Vec::new(),
            metadata: Vec::new(),
        };
        table.push_meta("tool", concat!("surprisal ", env!("CARGO_PKG_VERSION")));
        table
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn metadata(&self) -> &[(String, String)] {
        &self.metadata
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn push_meta(&mut self, key: impl Into<String>, value: impl ToString) {
        self.metadata.push((key.into(), value.to_string()));
    }

    pub fn push_row(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::Inconsistent(format!(
                "row of {} values for {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        if let Some(v) = row.iter().find(|v| !v.is_finite()) {
            return Err(Error::Inconsistent(format!("non-finite table entry {v}")));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column_values(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// `# key: value` metadata lines (units included), a header line, then
    /// comma-separated rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k}: {v}");
        }
        for c in &self.columns {
            let _ = writeln!(out, "# unit.{}: {}", c.name, c.unit);
        }
        let header: Vec<&str> = self.columns.iter().map(|c| c.name.as_str()).collect();
        let _ = writeln!(out, "{}", header.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    /// Headerless `x y` pairs, space separated, for plot-table consumers.
    pub fn to_plot_style(&self, x: &str, y: &str) -> Result<String> {
        let missing = |name: &str| Error::domain(format!("no column named {name}"));
        let xi = self.column_index(x).ok_or_else(|| missing(x))?;
        let yi = self.column_index(y).ok_or_else(|| missing(y))?;
        let mut out = String::new();
        for row in &self.rows {
            let _ = writeln!(out, "{} {}", row[xi], row[yi]);
        }
        Ok(out)
    }
}

/// Write `contents` to `path` through a temporary file in the same directory
/// and a rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CurveTable {
        let mut t = CurveTable::new(vec![Column::new("x", "bits"), Column::new("y", "nats")]);
        t.push_row(vec![0.0, 1.5]).unwrap();
        t.push_row(vec![1.0, 2.25]).unwrap();
        t
    }

    #[test]
    fn csv_layout() {
        let csv = sample().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("# tool: surprisal "));
        assert!(lines.contains(&"# unit.x: bits"));
        assert!(lines.contains(&"# unit.y: nats"));
        assert_eq!(&lines[lines.len() - 3..], &["x,y", "0,1.5", "1,2.25"]);
    }

    #[test]
    fn plot_style_is_headerless() {
        let t = sample();
        assert_eq!(t.to_plot_style("x", "y").unwrap(), "0 1.5\n1 2.25\n");
        assert!(t.to_plot_style("x", "z").is_err());
    }

    #[test]
    fn rejects_ragged_and_non_finite_rows() {
        let mut t = sample();
        assert!(t.push_row(vec![1.0]).is_err());
        assert!(t.push_row(vec![1.0, f64::NAN]).is_err());
        assert!(t.push_row(vec![f64::INFINITY, 0.0]).is_err());
        assert_eq!(t.rows().len(), 2);
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("curve.csv");
        write_atomic(&path, "old\n").unwrap();
        write_atomic(&path, "new\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "new\n");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
