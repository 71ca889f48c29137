//! CSV helpers shared by every tabular writer and reader.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Formats a float with 17 significant digits, which round-trips any `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

pub(crate) fn parse_f64(field: &str) -> Option<f64> {
    field.trim().parse::<f64>().ok()
}

pub(crate) fn create(path: &Path) -> Result<File> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    File::create(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    Ok(csv::Writer::from_writer(create(path)?))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = create(path)?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Finds a header column, reporting a structured error when absent.
pub(crate) fn column_index(headers: &csv::StringRecord, name: &str, source: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::MissingColumn {
            path: source.to_string(),
            column: name.to_string(),
        })
}

/// A whole CSV file held in memory, with row-aware typed accessors whose
/// errors name the file line and header column.
pub(crate) struct CsvTable {
    source: String,
    headers: csv::StringRecord,
    rows: Vec<csv::StringRecord>,
}

impl CsvTable {
    pub(crate) fn read<R: std::io::Read>(reader: R, source: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let rows = rdr.records().collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Self {
            source: source.to_string(),
            headers,
            rows,
        })
    }

    pub(crate) fn load(path: &Path) -> Result<Self> {
        Self::read(open(path)?, &path.display().to_string())
    }

    pub(crate) fn column(&self, name: &str) -> Result<usize> {
        column_index(&self.headers, name, &self.source)
    }

    pub(crate) fn len(&self) -> usize {
        self.rows.len()
    }

    pub(crate) fn text(&self, row: usize, col: usize) -> &str {
        self.rows[row].get(col).unwrap_or("")
    }

    pub(crate) fn error(&self, row: usize, col: usize, message: String) -> Error {
        Error::Load {
            path: self.source.clone(),
            row: row + 2,
            column: self.headers.get(col).unwrap_or("").to_string(),
            message,
        }
    }

    pub(crate) fn number(&self, row: usize, col: usize) -> Result<f64> {
        let raw = self.text(row, col);
        parse_f64(raw).ok_or_else(|| self.error(row, col, format!("cannot parse `{raw}` as a number")))
    }

    pub(crate) fn index(&self, row: usize, col: usize) -> Result<usize> {
        let raw = self.text(row, col);
        raw.parse::<usize>()
            .map_err(|_| self.error(row, col, format!("`{raw}` is not a non-negative integer")))
    }
}
