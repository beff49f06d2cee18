use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::Family;
use crate::linalg;

/// Response vector plus an `n x p` design with column labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub y: Vec<f64>,
    pub x: DMatrix<f64>,
    pub labels: Vec<String>,
    /// Per-column flag: the column has been shifted to mean zero.
    pub centered: Vec<bool>,
    /// Column means subtracted during centering (0 for uncentered columns).
    pub offsets: Vec<f64>,
}

impl Dataset {
    pub fn new(y: Vec<f64>, x: DMatrix<f64>, labels: Vec<String>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::Dimension(format!(
                "response has {} rows but design has {}",
                y.len(),
                x.nrows()
            )));
        }
        if labels.len() != x.ncols() {
            return Err(Error::Dimension(format!(
                "{} labels for {} columns",
                labels.len(),
                x.ncols()
            )));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidResponse(format!("non-finite response at row {}", i + 1)));
        }
        if let Some(k) = x.as_slice().iter().position(|v| !v.is_finite()) {
            let n = x.nrows().max(1);
            return Err(Error::Parse {
                row: k % n + 1,
                column: labels[k / n].clone(),
                reason: "non-finite value".into(),
            });
        }
        let mut seen = std::collections::HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::Format(format!("duplicate column name `{l}`")));
            }
        }
        let p = x.ncols();
        Ok(Dataset {
            y,
            x,
            labels,
            centered: vec![false; p],
            offsets: vec![0.0; p],
        })
    }

    /// Design with default labels `X1..Xp`.
    pub fn from_design(y: Vec<f64>, x: DMatrix<f64>) -> Result<Self> {
        let labels = (1..=x.ncols()).map(|j| format!("X{j}")).collect();
        Dataset::new(y, x, labels)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        linalg::column(&self.x, j)
    }

    /// Center every column not yet centered.
    pub fn center(&mut self) {
        let n = self.n();
        if n == 0 {
            return;
        }
        for j in 0..self.p() {
            if self.centered[j] {
                continue;
            }
            let mut col = self.x.column_mut(j);
            let mean = col.iter().sum::<f64>() / n as f64;
            for v in col.iter_mut() {
                *v -= mean;
            }
            self.offsets[j] = mean;
            self.centered[j] = true;
        }
    }

    pub fn centered(mut self) -> Self {
        self.center();
        self
    }

    pub fn check_family(&self, family: Family) -> Result<()> {
        family.check_response(&self.y)
    }

    /// Rows `rows` (in the given order) as a fresh response vector and design.
    pub fn take_rows(&self, rows: &[usize]) -> (Vec<f64>, DMatrix<f64>) {
        let y = rows.iter().map(|&i| self.y[i]).collect();
        let n = self.n();
        let m = rows.len();
        let src = self.x.as_slice();
        let mut data = Vec::with_capacity(m * self.p());
        for j in 0..self.p() {
            let col = &src[j * n..(j + 1) * n];
            data.extend(rows.iter().map(|&i| col[i]));
        }
        (y, DMatrix::from_vec(m, self.p(), data))
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centering_zeroes_means() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 10.0, 2.0, 20.0, 6.0, 30.0]);
        let d = Dataset::from_design(vec![0.0, 1.0, 1.0], x).unwrap().centered();
        for j in 0..2 {
            let m: f64 = d.column(j).iter().sum::<f64>() / 3.0;
            assert!(m.abs() < 1e-10);
        }
        assert_eq!(d.offsets, vec![3.0, 20.0]);
        assert!(d.centered.iter().all(|&c| c));
    }

    #[test]
    fn rejects_duplicates_and_mismatch() {
        let x = DMatrix::zeros(2, 2);
        assert!(Dataset::new(vec![0.0, 1.0], x.clone(), vec!["a".into(), "a".into()]).is_err());
        assert!(Dataset::new(vec![0.0], x, vec!["a".into(), "b".into()]).is_err());
    }

    #[test]
    fn take_rows_copies_in_order() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 4.0, 2.0, 5.0, 3.0, 6.0]);
        let d = Dataset::from_design(vec![7.0, 8.0, 9.0], x).unwrap();
        let (y, xs) = d.take_rows(&[2, 0]);
        assert_eq!(y, vec![9.0, 7.0]);
        assert_eq!(xs[(0, 1)], 6.0);
        assert_eq!(xs[(1, 0)], 1.0);
    }
}
