use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;

use crate::data::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadOptions {
    pub response: String,
    pub delimiter: u8,
    pub center: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            response: "y".into(),
            delimiter: b',',
            center: true,
        }
    }
}

pub fn load_dataset(path: &Path, opts: &LoadOptions) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    parse_dataset(file, opts)
}

/// Delimited text with a header row. Row numbers in diagnostics count data
/// rows from 1.
pub fn parse_dataset<R: Read>(reader: R, opts: &LoadOptions) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(opts.delimiter)
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header.iter().any(|h| h.is_empty()) {
        return Err(Error::Format("empty column name in header".into()));
    }
    let mut seen = std::collections::HashSet::new();
    for h in &header {
        if !seen.insert(h.as_str()) {
            return Err(Error::Format(format!("duplicate column name `{h}`")));
        }
    }
    let yi = header
        .iter()
        .position(|h| *h == opts.response)
        .ok_or_else(|| Error::Format(format!("response column `{}` not found", opts.response)))?;
    let labels: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != yi)
        .map(|(_, h)| h.clone())
        .collect();
    let p = labels.len();

    let mut y = Vec::new();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); p];
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths { len, expected_len, .. } => Error::Parse {
                row: r + 1,
                column: String::new(),
                reason: format!("{len} fields, expected {expected_len}"),
            },
            _ => Error::Csv(e),
        })?;
        let mut c = 0;
        for (k, cell) in rec.iter().enumerate() {
            let cell = cell.trim();
            let bad = |reason: &str| Error::Parse {
                row: r + 1,
                column: header[k].clone(),
                reason: reason.into(),
            };
            if cell.is_empty() {
                return Err(bad("missing value"));
            }
            let v: f64 = cell.parse().map_err(|_| bad(&format!("`{cell}` is not numeric")))?;
            if !v.is_finite() {
                return Err(bad("non-finite value"));
            }
            if k == yi {
                y.push(v);
            } else {
                cols[c].push(v);
                c += 1;
            }
        }
    }
    if y.is_empty() {
        return Err(Error::Format("no data rows".into()));
    }
    let n = y.len();
    let x = DMatrix::from_iterator(n, p, cols.into_iter().flatten());
    let d = Dataset::new(y, x, labels)?;
    Ok(if opts.center { d.centered() } else { d })
}
