use nalgebra::DMatrix;

use super::{rank_order, SelectionResult, Selector};
use crate::error::{Error, Result};
use crate::family::Family;
use crate::glm::{fit_columns, FitOptions};
use crate::linalg::column;
use crate::rng::Stream;

/// `floor(n / ln n)`, at least 1.
pub fn sis_default_cap(n: usize) -> usize {
    if n < 3 {
        return 1;
    }
    ((n as f64 / (n as f64).ln()).floor() as usize).max(1)
}

/// Sure independence screening: rank columns by the magnitude of their
/// coefficient in a single-predictor GLM (with intercept), keep the top `d`.
/// Ties go to the smaller index; columns whose marginal fit fails rank last.
pub fn sis_select(y: &[f64], x: &DMatrix<f64>, family: Family, d: usize) -> Result<SelectionResult> {
    if d == 0 {
        return Err(Error::InvalidArgument("screening cap must be at least 1".into()));
    }
    if x.nrows() != y.len() {
        return Err(Error::Dimension(format!("{} responses for {} rows", y.len(), x.nrows())));
    }
    let p = x.ncols();
    let opts = FitOptions::default();
    let mut warnings = Vec::new();
    let scores: Vec<f64> = (0..p)
        .map(|j| match fit_columns(y, &[column(x, j)], family, &opts) {
            Ok(fit) if fit.beta[1].is_finite() => fit.beta[1].abs(),
            Ok(_) => {
                warnings.push(format!("column {j}: non-finite marginal coefficient"));
                f64::NAN
            }
            Err(e) => {
                warnings.push(format!("column {j}: {e}"));
                f64::NAN
            }
        })
        .collect();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| rank_order(scores[a], scores[b]).then(a.cmp(&b)));
    order.truncate(d.min(p));
    order.sort_unstable();
    Ok(SelectionResult {
        selected: order,
        scores: Some(scores),
        lambda: None,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Sis {
    /// Fixed cap; `None` uses [`sis_default_cap`] of the number of rows.
    pub cap: Option<usize>,
}

impl Selector for Sis {
    fn select(&self, y: &[f64], x: &DMatrix<f64>, family: Family, _stream: Stream) -> Result<SelectionResult> {
        let d = self.cap.unwrap_or_else(|| sis_default_cap(y.len()));
        sis_select(y, x, family, d)
    }

    fn name(&self) -> String {
        match self.cap {
            Some(d) => format!("sis(d={d})"),
            None => "sis".into(),
        }
    }
}
