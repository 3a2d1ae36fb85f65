//! Delimited-text matrix ingestion and output.
//!
//! Layout with headers enabled: the first row holds column ids (its first cell
//! is a label and ignored), the first column holds row ids. Row and column
//! numbers in error messages are 1-based positions in the file, counting the
//! header row and the id column.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::matrix::{default_ids, ExpressionMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Orientation {
    #[default]
    SamplesAsRows,
    FeaturesAsRows,
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    /// Field delimiter; `None` picks tab for `.tsv`/`.tab`/`.txt` and comma otherwise.
    pub delimiter: Option<u8>,
    pub orientation: Orientation,
    pub header: bool,
    /// Drop feature columns containing a missing cell instead of failing.
    pub drop_missing: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            delimiter: None,
            orientation: Orientation::SamplesAsRows,
            header: true,
            drop_missing: false,
        }
    }
}

pub fn delimiter_for(path: &Path) -> u8 {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        Some("tsv" | "tab" | "txt") => b'\t',
        _ => b',',
    }
}

pub fn load_matrix(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<ExpressionMatrix> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let delimiter = opts.delimiter.unwrap_or_else(|| delimiter_for(path));
    parse_matrix(&text, delimiter, opts)
}

fn is_missing(cell: &str) -> bool {
    matches!(cell, "" | "NA" | "na" | "N/A" | "NaN" | "nan" | "NAN" | "null")
}

/// Parses a matrix from delimited text.
pub fn parse_matrix(text: &str, delimiter: u8, opts: &LoadOptions) -> Result<ExpressionMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(delimiter)
        .from_reader(text.as_bytes());

    let mut col_ids: Option<Vec<String>> = None;
    let mut row_ids = Vec::new();
    let mut cells: Vec<Option<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    let mut first_missing: Option<(usize, usize)> = None;

    for (k, record) in reader.records().enumerate() {
        let row = k + 1;
        let record = record.map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        if record.iter().all(|c| c.trim().is_empty()) {
            continue;
        }
        if opts.header && col_ids.is_none() {
            col_ids = Some(record.iter().skip(1).map(|c| c.trim().to_string()).collect());
            width = Some(record.len());
            continue;
        }
        match width {
            Some(w) if w != record.len() => {
                return Err(Error::Parse {
                    row,
                    message: format!("expected {w} fields, found {}", record.len()),
                })
            }
            None => width = Some(record.len()),
            _ => {}
        }
        let mut fields = record.iter();
        let offset = if opts.header {
            row_ids.push(fields.next().unwrap_or_default().trim().to_string());
            1
        } else {
            0
        };
        for (c, cell) in fields.enumerate() {
            let col = c + offset + 1;
            let cell = cell.trim();
            if is_missing(cell) {
                first_missing.get_or_insert((row, col));
                cells.push(None);
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::NonNumeric {
                row,
                col,
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonNumeric {
                    row,
                    col,
                    value: cell.to_string(),
                });
            }
            cells.push(Some(v));
        }
    }

    let ncols = width.unwrap_or(0).saturating_sub(usize::from(opts.header));
    let nrows = cells.len().checked_div(ncols).unwrap_or(0);
    if nrows == 0 || ncols == 0 {
        return Err(Error::EmptyMatrix);
    }
    let row_ids = if opts.header { row_ids } else { Vec::new() };
    let col_ids = col_ids.unwrap_or_default();

    let grid = Array2::from_shape_vec((nrows, ncols), cells).expect("rectangular by construction");
    let grid = match opts.orientation {
        Orientation::SamplesAsRows => grid,
        Orientation::FeaturesAsRows => grid.reversed_axes(),
    };
    let (sample_ids, feature_ids) = match (opts.header, opts.orientation) {
        (false, _) => (default_ids("S", grid.nrows()), default_ids("G", grid.ncols())),
        (true, Orientation::SamplesAsRows) => (row_ids, col_ids),
        (true, Orientation::FeaturesAsRows) => (col_ids, row_ids),
    };

    let keep: Vec<usize> = (0..grid.ncols())
        .filter(|&j| grid.column(j).iter().all(Option::is_some))
        .collect();
    if keep.len() < grid.ncols() {
        if !opts.drop_missing {
            let (row, col) = first_missing.expect("a missing cell was recorded");
            return Err(Error::Missing { row, col });
        }
        log::warn!(
            "dropped {} feature(s) containing missing values",
            grid.ncols() - keep.len()
        );
    }
    let values = Array2::from_shape_fn((grid.nrows(), keep.len()), |(i, k)| {
        grid[[i, keep[k]]].expect("kept columns are complete")
    });
    let feature_ids = keep.iter().map(|&j| feature_ids[j].clone()).collect();
    ExpressionMatrix::new(values, sample_ids, feature_ids, None)
}

/// Formats a matrix with samples as rows, feature ids in the first row.
///
/// Values use the shortest decimal form that parses back to the same `f64`.
pub fn format_matrix(matrix: &ExpressionMatrix, delimiter: u8) -> String {
    let d = delimiter as char;
    let mut out = String::from("sample");
    for f in matrix.feature_ids() {
        out.push(d);
        out.push_str(f);
    }
    out.push('\n');
    for (i, id) in matrix.sample_ids().iter().enumerate() {
        out.push_str(id);
        for v in matrix.sample(i) {
            let _ = write!(out, "{d}{v}");
        }
        out.push('\n');
    }
    out
}

pub fn write_matrix(path: impl AsRef<Path>, matrix: &ExpressionMatrix, delimiter: Option<u8>) -> Result<()> {
    let path = path.as_ref();
    let delimiter = delimiter.unwrap_or_else(|| delimiter_for(path));
    write_atomic(path, format_matrix(matrix, delimiter).as_bytes())
}

/// Writes `contents` to a temporary file next to `path`, then renames it into place.
pub fn write_atomic(path: impl AsRef<Path>, contents: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(contents).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Reads a two-column `sample,group` table. A leading `sample<delim>group`
/// header row is skipped.
pub fn load_groups(path: impl AsRef<Path>, delimiter: Option<u8>) -> Result<HashMap<String, String>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(delimiter.unwrap_or_else(|| delimiter_for(path)))
        .from_reader(text.as_bytes());
    let mut map = HashMap::new();
    for (k, record) in reader.records().enumerate() {
        let row = k + 1;
        let record = record.map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        if record.iter().all(|c| c.trim().is_empty()) {
            continue;
        }
        if record.len() != 2 {
            return Err(Error::Parse {
                row,
                message: format!("expected 2 fields (sample, group), found {}", record.len()),
            });
        }
        let (s, g) = (record[0].trim(), record[1].trim());
        if row == 1 && s.eq_ignore_ascii_case("sample") && g.eq_ignore_ascii_case("group") {
            continue;
        }
        if map.insert(s.to_string(), g.to_string()).is_some() {
            return Err(Error::DuplicateId {
                kind: "sample",
                id: s.to_string(),
            });
        }
    }
    Ok(map)
}
