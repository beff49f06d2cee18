use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::dist::chi2_upper;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastTest {
    pub subset: Vec<usize>,
    pub beta1_hat: Vec<f64>,
    pub sigma1_hat: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub r: Vec<f64>,
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

const SINGULAR_TOL: f64 = 1e-10;

/// Rows of a symmetric PSD matrix that are numerically dependent on the rows
/// before them (or on nothing, when their own variance is zero).
fn dependent_rows(m: &DMatrix<f64>) -> Vec<usize> {
    let r = m.nrows();
    let scale = (0..r).map(|k| m[(k, k)].abs()).fold(0.0, f64::max);
    let mut l = DMatrix::<f64>::zeros(r, r);
    let mut kept = Vec::new();
    let mut bad = Vec::new();
    for k in 0..r {
        let mut ok = true;
        let mut row = vec![0.0; r];
        for &c in &kept {
            let s: f64 = kept
                .iter()
                .take_while(|&&t| t < c)
                .map(|&t| row[t] * l[(c, t)])
                .sum();
            row[c] = (m[(k, c)] - s) / l[(c, c)];
        }
        let d = m[(k, k)] - kept.iter().map(|&t| row[t] * row[t]).sum::<f64>();
        if !(d > SINGULAR_TOL * scale.max(m[(k, k)].abs())) || !(scale > 0.0) {
            ok = false;
        }
        if ok {
            for &t in &kept {
                l[(k, t)] = row[t];
            }
            l[(k, k)] = d.sqrt();
            kept.push(k);
        } else {
            bad.push(k);
        }
    }
    bad
}

/// Wald test of `Q beta1 = R`: `T = (Q b - R)' (Q S Q')^{-1} (Q b - R)`,
/// referred to a chi-square with `rows(Q)` degrees of freedom.
pub fn contrast_test(
    subset: &[usize],
    beta1_hat: &[f64],
    sigma1_hat: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &[f64],
) -> Result<ContrastTest> {
    let p1 = beta1_hat.len();
    if sigma1_hat.nrows() != p1 || sigma1_hat.ncols() != p1 {
        return Err(Error::Dimension(format!(
            "covariance is {}x{}, expected {p1}x{p1}",
            sigma1_hat.nrows(),
            sigma1_hat.ncols()
        )));
    }
    if q.ncols() != p1 {
        return Err(Error::Dimension(format!("Q has {} columns, expected {p1}", q.ncols())));
    }
    if q.nrows() != r.len() {
        return Err(Error::Dimension(format!("Q has {} rows but R has {} entries", q.nrows(), r.len())));
    }
    if q.nrows() == 0 || q.nrows() > p1 {
        return Err(Error::InvalidArgument(format!(
            "contrast needs between 1 and {p1} rows, got {}",
            q.nrows()
        )));
    }
    if q.iter().chain(r).chain(beta1_hat).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite entry in contrast inputs".into()));
    }
    let m = q * sigma1_hat * q.transpose();
    let m = (&m + m.transpose()) * 0.5;
    let bad = dependent_rows(&m);
    if !bad.is_empty() {
        return Err(Error::SingularContrast { rows: bad });
    }
    let chol = m
        .clone()
        .cholesky()
        .ok_or(Error::SingularContrast { rows: (0..q.nrows()).collect() })?;
    let diff = q * DVector::from_column_slice(beta1_hat) - DVector::from_column_slice(r);
    let statistic = diff.dot(&chol.solve(&diff)).max(0.0);
    let df = q.nrows();
    Ok(ContrastTest {
        subset: subset.to_vec(),
        beta1_hat: beta1_hat.to_vec(),
        sigma1_hat: sigma1_hat.clone(),
        q: q.clone(),
        r: r.to_vec(),
        statistic,
        df,
        p_value: chi2_upper(statistic, df),
    })
}
