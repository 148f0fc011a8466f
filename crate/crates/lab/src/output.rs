//! Result files. Every file is written to a temporary sibling and renamed into
//! place, so an interrupted run never leaves a partial file behind.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

#[derive(Debug, Clone)]
pub struct OutDir {
    path: PathBuf,
}

impl OutDir {
    pub fn create(path: &Path) -> Result<Self> {
        std::fs::create_dir_all(path).with_context(|| format!("cannot create output directory {}", path.display()))?;
        Ok(Self { path: path.to_path_buf() })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn write_bytes(&self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let target = self.path.join(name);
        let mut tmp = tempfile::Builder::new()
            .prefix(".parisi-lab-")
            .suffix(".tmp")
            .tempfile_in(&self.path)
            .with_context(|| format!("cannot create temporary file in {}", self.path.display()))?;
        tmp.write_all(bytes)?;
        tmp.as_file().sync_all()?;
        // Temporary files are private; results should get ordinary permissions.
        #[cfg(unix)]
        {
            use std::os::unix::fs::PermissionsExt;
            tmp.as_file().set_permissions(std::fs::Permissions::from_mode(0o644))?;
        }
        tmp.persist(&target)
            .with_context(|| format!("cannot write {}", target.display()))?;
        Ok(target)
    }

    pub fn write_csv(&self, name: &str, table: &Table) -> Result<PathBuf> {
        self.write_bytes(name, &table.to_csv()?)
    }

    pub fn write_json<T: Serialize + ?Sized>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }
}

/// A CSV table held as strings; floats use the shortest round-trip form.
#[derive(Debug, Clone)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row.into_iter().map(|c| c.0).collect());
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| anyhow::anyhow!("{}", e.error()))
    }
}

#[derive(Debug, Clone)]
pub struct Cell(String);

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell(number(v))
    }
}

/// Shortest round-trip text, switching to exponent form for very small or large magnitudes.
pub fn number(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) || !a.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell(v.to_string())
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell(v.to_string())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell(v.to_string())
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell(v)
    }
}

/// `[a, b, c]` rendered as `a;b;c`.
pub fn joined(values: &[f64]) -> Cell {
    Cell(values.iter().map(|&v| number(v)).collect::<Vec<_>>().join(";"))
}

#[macro_export]
macro_rules! row {
    ($($v:expr),* $(,)?) => {
        vec![$($crate::output::Cell::from($v)),*]
    };
}
