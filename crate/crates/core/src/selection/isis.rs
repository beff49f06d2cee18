use nalgebra::DMatrix;

use super::lasso::{default_lambda_grid, lambda_max, lasso_path_until, LassoOptions};
use super::sis::{sis_default_cap, sis_select};
use super::{rank_order, SelectionResult, Selector};
use crate::error::{Error, Result};
use crate::family::Family;
use crate::glm::{fit_columns, Augmenter, FitOptions};
use crate::linalg::{column, columns};
use crate::rng::Stream;

const BIC_PATIENCE: usize = 10;

/// Iterative screening with a penalized refit.
///
/// The top `2d/3` columns by marginal coefficient are refit by LASSO tuned
/// with BIC. Each later round ranks the columns outside the current model
/// `M` by the loss decrease of the fit on `M + {j}`, pads `M` up to `d`
/// candidates with the best of them and refits by LASSO-BIC. Rounds stop when
/// the model repeats, reaches `d` columns, or after `max_iter` rounds.
pub fn isis_select(
    y: &[f64],
    x: &DMatrix<f64>,
    family: Family,
    d: usize,
    max_iter: usize,
) -> Result<SelectionResult> {
    if d == 0 {
        return Err(Error::InvalidArgument("screening cap must be at least 1".into()));
    }
    let p = x.ncols();
    let d = d.min(p);
    let marginal = sis_select(y, x, family, p)?;
    let scores = marginal.scores.clone().unwrap_or_else(|| vec![0.0; p]);
    let mut warnings = marginal.warnings;
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| rank_order(scores[a], scores[b]).then(a.cmp(&b)));
    let first = ((2 * d) / 3).max(1);
    let mut candidates: Vec<usize> = order[..first].to_vec();
    candidates.sort_unstable();
    let (mut model, mut lambda) = lasso_bic(y, x, family, &candidates, &mut warnings)?;

    let opts = FitOptions::default();
    let mut seen = vec![model.clone()];
    for _ in 1..max_iter {
        if model.len() >= d {
            break;
        }
        let gain = conditional_gain(y, x, family, &model, &opts);
        let mut rest: Vec<usize> = (0..p).filter(|j| model.binary_search(j).is_err()).collect();
        rest.sort_by(|&a, &b| rank_order(gain[a], gain[b]).then(a.cmp(&b)));
        rest.truncate(d - model.len());
        let mut cand = model.clone();
        cand.extend(rest);
        cand.sort_unstable();
        let (next, l) = lasso_bic(y, x, family, &cand, &mut warnings)?;
        if seen.contains(&next) {
            break;
        }
        seen.push(next.clone());
        model = next;
        lambda = l;
    }
    Ok(SelectionResult {
        selected: model,
        scores: Some(scores),
        lambda,
        warnings,
    })
}

/// `l(M) - l(M + {j})` for every column outside `M`; NaN when the fit fails.
fn conditional_gain(y: &[f64], x: &DMatrix<f64>, family: Family, model: &[usize], opts: &FitOptions) -> Vec<f64> {
    let p = x.ncols();
    let mut gain = vec![f64::NAN; p];
    let cols = columns(x, model);
    let base_fit = match fit_columns(y, &cols, family, opts) {
        Ok(f) if f.converged && !f.stabilized => f,
        _ => return gain,
    };
    let base = Augmenter::new(y, cols.clone(), &base_fit, family);
    let mut aug = cols;
    aug.push(column(x, 0));
    for (j, g) in gain.iter_mut().enumerate() {
        if model.binary_search(&j).is_ok() {
            continue;
        }
        let xj = column(x, j);
        let loss = match base.as_ref().and_then(|b| b.extend(y, xj, family, opts)) {
            Some(e) => Some(e.loss),
            None => {
                *aug.last_mut().unwrap() = xj;
                fit_columns(y, &aug, family, opts)
                    .ok()
                    .filter(|f| f.converged)
                    .map(|f| f.neg_loglik)
            }
        };
        if let Some(l) = loss {
            *g = base_fit.neg_loglik - l;
        }
    }
    gain
}

/// LASSO path on the candidate columns, tuned by BIC. Returns the active set
/// as original column indices. The path stops once BIC has not improved for
/// `BIC_PATIENCE` grid points.
fn lasso_bic(
    y: &[f64],
    x: &DMatrix<f64>,
    family: Family,
    cand: &[usize],
    warnings: &mut Vec<String>,
) -> Result<(Vec<usize>, Option<f64>)> {
    let n = y.len();
    let xs = x.select_columns(cand);
    let lmax = lambda_max(y, &xs, family);
    if !(lmax > 0.0) || cand.is_empty() {
        return Ok((Vec::new(), None));
    }
    let grid = default_lambda_grid(lmax, 100, 1e-3);
    let opts = LassoOptions {
        kkt_tol: 1e-4,
        early_stop: true,
        max_active: Some((n / 2).min(cand.len())),
        ..LassoOptions::default()
    };
    let nf = n as f64;
    let bic = |dev: f64, df: usize| {
        let fit = match family {
            Family::Gaussian => nf * (dev.max(f64::MIN_POSITIVE) / nf).ln(),
            _ => dev,
        };
        fit + df as f64 * nf.ln()
    };
    let mut best: Option<(f64, usize)> = None;
    let mut k = 0;
    let path = lasso_path_until(y, &xs, family, &grid, &opts, |pt| {
        let v = bic(pt.deviance, pt.active.len());
        if pt.active.len() <= n / 2 && v.is_finite() && best.is_none_or(|(b, _)| v < b) {
            best = Some((v, k));
        }
        k += 1;
        best.is_some_and(|(_, kb)| k > kb + BIC_PATIENCE)
    })?;
    let Some((_, k)) = best else {
        warnings.push("penalized refit produced no usable path point".into());
        return Ok((Vec::new(), None));
    };
    let pt = &path[k];
    if !pt.converged {
        warnings.push(format!("penalized refit at lambda {} did not converge", pt.lambda));
    }
    Ok((pt.active.iter().map(|&a| cand[a]).collect(), Some(pt.lambda)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Isis {
    /// Candidate-set size; `None` uses [`sis_default_cap`] of the number of rows.
    pub cap: Option<usize>,
    pub max_iter: usize,
}

impl Default for Isis {
    fn default() -> Self {
        Isis { cap: None, max_iter: 5 }
    }
}

impl Selector for Isis {
    fn select(&self, y: &[f64], x: &DMatrix<f64>, family: Family, _stream: Stream) -> Result<SelectionResult> {
        let d = self.cap.unwrap_or_else(|| sis_default_cap(y.len()));
        isis_select(y, x, family, d, self.max_iter.max(1))
    }

    fn name(&self) -> String {
        match self.cap {
            Some(d) => format!("isis(d={d})"),
            None => "isis".into(),
        }
    }
}
