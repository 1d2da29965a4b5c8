//! CSV ingestion.
//!
//! Input is either one file holding both samples in two columns (the
//! shorter column padded with blanks) or two files with one selected
//! column each. The first line of every file is a header.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use gicband_core::Sample;

use crate::error::{CliError, CliResult};

/// Column selected by header name or 1-based position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnRef {
    Name(String),
    Index(usize),
}

impl FromStr for ColumnRef {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(CliError::Input("empty column selector".into()));
        }
        match s.parse::<usize>() {
            Ok(0) => Err(CliError::Input("column positions start at 1".into())),
            Ok(i) => Ok(ColumnRef::Index(i)),
            Err(_) => Ok(ColumnRef::Name(s.to_string())),
        }
    }
}

/// Parses `a,b` into two selectors.
pub fn parse_cols(spec: &str) -> CliResult<[ColumnRef; 2]> {
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() != 2 {
        return Err(CliError::Input(format!(
            "--cols expects two selectors separated by a comma, got '{spec}'"
        )));
    }
    Ok([parts[0].parse()?, parts[1].parse()?])
}

#[derive(Debug, Clone)]
pub struct LoadedSamples {
    pub s1: Sample,
    pub s2: Sample,
    /// Blank cells skipped in each selected column.
    pub skipped: [usize; 2],
}

impl LoadedSamples {
    pub fn total_skipped(&self) -> usize {
        self.skipped[0] + self.skipped[1]
    }
}

fn open(path: &Path) -> CliResult<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

fn resolve(path: &Path, headers: &csv::StringRecord, col: &ColumnRef) -> CliResult<usize> {
    match col {
        ColumnRef::Index(i) if *i <= headers.len() => Ok(i - 1),
        ColumnRef::Index(i) => Err(CliError::Input(format!(
            "{}: column {i} requested but the header has {} field(s)",
            path.display(),
            headers.len()
        ))),
        ColumnRef::Name(name) => headers.iter().position(|h| h == name).ok_or_else(|| {
            CliError::Input(format!("{}: no column named '{name}'", path.display()))
        }),
    }
}

/// Reads the selected columns of one file; returns values and blank counts.
fn read_columns(path: &Path, cols: &[ColumnRef]) -> CliResult<Vec<(Vec<f64>, usize)>> {
    let mut rdr = open(path)?;
    let headers = rdr
        .headers()
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
        .clone();
    let idx: Vec<usize> = cols
        .iter()
        .map(|c| resolve(path, &headers, c))
        .collect::<CliResult<_>>()?;
    let mut out = vec![(Vec::new(), 0usize); cols.len()];
    for record in rdr.records() {
        let record = record.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let line = record.position().map_or(0, |p| p.line());
        for (j, &i) in idx.iter().enumerate() {
            let cell = record.get(i).unwrap_or("");
            if cell.is_empty() {
                out[j].1 += 1;
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| {
                CliError::Input(format!(
                    "{} row {line}: cannot parse '{cell}' as a number",
                    path.display()
                ))
            })?;
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Input(format!(
                    "{} row {line}: value {cell} is not a positive finite number",
                    path.display()
                )));
            }
            out[j].0.push(v);
        }
    }
    Ok(out)
}

fn to_sample(values: Vec<f64>, which: usize) -> CliResult<Sample> {
    if values.len() < 2 {
        return Err(CliError::Input(format!(
            "sample {which} has {} valid value(s); at least 2 are required",
            values.len()
        )));
    }
    Ok(Sample::new(values)?)
}

/// Loads two samples from one two-column file or from two files.
///
/// Without selectors the first two columns of a single file, or the first
/// column of each of two files, are used. Rows whose selected cell is blank
/// are skipped per column and counted; in a single file both columns are
/// read independently, so samples may differ in size.
pub fn load_samples(paths: &[PathBuf], cols: Option<&[ColumnRef; 2]>) -> CliResult<LoadedSamples> {
    let default = [ColumnRef::Index(1), ColumnRef::Index(2)];
    let ((v1, k1), (v2, k2)) = match paths {
        [one] => {
            let cols = cols.unwrap_or(&default);
            let mut read = read_columns(one, cols)?;
            let second = read.pop().expect("two columns");
            (read.pop().expect("two columns"), second)
        }
        [a, b] => {
            let first = [ColumnRef::Index(1), ColumnRef::Index(1)];
            let cols = cols.unwrap_or(&first);
            let x = read_columns(a, std::slice::from_ref(&cols[0]))?.remove(0);
            let y = read_columns(b, std::slice::from_ref(&cols[1]))?.remove(0);
            (x, y)
        }
        _ => {
            return Err(CliError::Input(format!(
                "expected one or two input files, got {}",
                paths.len()
            )))
        }
    };
    Ok(LoadedSamples {
        s1: to_sample(v1, 1)?,
        s2: to_sample(v2, 2)?,
        skipped: [k1, k2],
    })
}
