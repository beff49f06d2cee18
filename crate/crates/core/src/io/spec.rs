use nalgebra::DMatrix;

use crate::error::{Error, Result};

fn number(tok: &str) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| Error::Format(format!("`{tok}` is not a number")))?;
    if !v.is_finite() {
        return Err(Error::Format(format!("`{tok}` is not finite")));
    }
    Ok(v)
}

fn entries(row: &str) -> impl Iterator<Item = &str> {
    row.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty())
}

/// Matrix written row by row: rows separated by `;` or newlines, entries by
/// commas or whitespace, e.g. `1,0;0,1`.
pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for row in text.split(|c| c == ';' || c == '\n') {
        let vals = entries(row).map(number).collect::<Result<Vec<_>>>()?;
        if !vals.is_empty() {
            rows.push(vals);
        }
    }
    let Some(first) = rows.first() else {
        return Err(Error::Format("empty matrix".into()));
    };
    let c = first.len();
    if let Some(k) = rows.iter().position(|r| r.len() != c) {
        return Err(Error::Format(format!(
            "row {} has {} entries, expected {c}",
            k + 1,
            rows[k].len()
        )));
    }
    Ok(DMatrix::from_row_iterator(rows.len(), c, rows.into_iter().flatten()))
}

/// Vector of numbers separated by commas, semicolons or whitespace.
pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    let v = text
        .split(|c: char| c == ',' || c == ';' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(number)
        .collect::<Result<Vec<_>>>()?;
    if v.is_empty() {
        return Err(Error::Format("empty vector".into()));
    }
    Ok(v)
}

/// Comma-separated column labels or 1-based column numbers, resolved to
/// 0-based column indices in the order given. Labels take precedence over
/// numbers.
pub fn parse_subset(text: &str, labels: &[String]) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for tok in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let j = match labels.iter().position(|l| l == tok) {
            Some(j) => j,
            None => match tok.parse::<usize>() {
                Ok(k) if k >= 1 && k <= labels.len() => k - 1,
                Ok(k) => return Err(Error::Format(format!("column number {k} outside 1..={}", labels.len()))),
                Err(_) => return Err(Error::Format(format!("unknown column `{tok}`"))),
            },
        };
        if out.contains(&j) {
            return Err(Error::Format(format!("column `{tok}` listed twice")));
        }
        out.push(j);
    }
    if out.is_empty() {
        return Err(Error::Format("empty subset".into()));
    }
    Ok(out)
}
