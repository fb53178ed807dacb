//! CSV ingest and all-or-nothing output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Option<Vec<String>>,
    pub rows: Vec<Vec<String>>,
}

/// Reads a comma-separated file; the first row is a header when any of its
/// fields fails to parse as a number.
pub fn read_table(path: &Path) -> Result<Table> {
    let text = fs::read_to_string(path).map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<String>> = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        rows.push(record.iter().map(str::to_string).collect());
    }
    let header = match rows.first() {
        Some(first) if first.iter().any(|f| f.parse::<f64>().is_err()) => Some(rows.remove(0)),
        _ => None,
    };
    Ok(Table { header, rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub labels: Option<Vec<String>>,
    pub values: Vec<f64>,
}

impl Table {
    fn column_index(&self, name: &str) -> Option<usize> {
        self.header.as_ref()?.iter().position(|h| h.eq_ignore_ascii_case(name))
    }

    /// A named column, or for headerless/unnamed use: the only column, or
    /// the second of a `(label, value)` pair.
    pub fn series(&self, column: Option<&str>) -> Result<Series> {
        let width = self.rows.first().map(Vec::len).unwrap_or(0);
        let (value_col, label_col) = match column {
            Some(name) => (
                self.column_index(name)
                    .ok_or_else(|| Error::Input(format!("no column named '{name}'")))?,
                None,
            ),
            None => match width {
                1 => (0, None),
                2 => (1, Some(0)),
                0 => return Err(Error::Input("input has no rows".into())),
                w => {
                    return Err(Error::Input(format!(
                        "expected one column or (label, value) pairs, found {w} columns"
                    )))
                }
            },
        };
        let mut values = Vec::with_capacity(self.rows.len());
        let mut labels = label_col.map(|_| Vec::with_capacity(self.rows.len()));
        for (i, row) in self.rows.iter().enumerate() {
            let field = row
                .get(value_col)
                .ok_or_else(|| Error::Input(format!("row {} is missing column {}", i + 1, value_col + 1)))?;
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Input(format!("row {}: cannot parse '{field}' as a number", i + 1)))?;
            if !v.is_finite() {
                return Err(Error::Input(format!("row {}: non-finite value", i + 1)));
            }
            values.push(v);
            if let (Some(labels), Some(c)) = (labels.as_mut(), label_col) {
                labels.push(row.get(c).cloned().unwrap_or_default());
            }
        }
        if values.is_empty() {
            return Err(Error::Input("input has no data rows".into()));
        }
        Ok(Series { labels, values })
    }
}

impl Series {
    /// Keeps the last `2^J` points, `2^J <= len`.
    pub fn truncate_to_dyadic(&mut self) {
        let keep = 1usize << (usize::BITS - 1 - self.values.len().leading_zeros());
        let drop = self.values.len() - keep;
        self.values.drain(..drop);
        if let Some(labels) = self.labels.as_mut() {
            labels.drain(..drop);
        }
    }
}

/// Files staged in the destination directory and renamed into place
/// together once all of them were written.
pub struct AtomicBatch {
    dir: PathBuf,
    staged: Vec<(NamedTempFile, String)>,
}

impl AtomicBatch {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            staged: Vec::new(),
        })
    }

    pub fn add<F>(&mut self, name: &str, write: F) -> Result<()>
    where
        F: FnOnce(&mut dyn Write) -> Result<()>,
    {
        let mut tmp = NamedTempFile::new_in(&self.dir)?;
        {
            let mut buf = std::io::BufWriter::new(tmp.as_file_mut());
            write(&mut buf)?;
            buf.flush()?;
        }
        self.staged.push((tmp, name.to_string()));
        Ok(())
    }

    pub fn commit(self) -> Result<Vec<PathBuf>> {
        let mut written = Vec::with_capacity(self.staged.len());
        for (tmp, name) in self.staged {
            let dest = self.dir.join(&name);
            tmp.persist(&dest).map_err(|e| Error::Io(e.error))?;
            written.push(dest);
        }
        Ok(written)
    }
}
