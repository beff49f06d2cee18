use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::variance::{covariance_components, finite_sample_factor};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::family::Family;
use crate::glm::fit_mle;
use crate::linalg::dot;
use crate::selection::Selector;
use crate::smooth::{select_on_split, with_threads, SsglmOptions};
use crate::split::{make_splits, SplitPlan};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubvectorFit {
    pub family: Family,
    /// Target columns, in the order given.
    pub subset: Vec<usize>,
    pub beta1_hat: Vec<f64>,
    /// One row per split; NaN rows mark splits whose joint fit failed.
    pub split_estimates: Vec<Vec<f64>>,
    pub selected: Vec<Vec<usize>>,
    pub plan: SplitPlan,
    pub failed_splits: Vec<usize>,
}

/// Joint column set for one split: `S` in its own order, then the targets
/// not already in `S`.
pub(crate) fn union_columns(selected: &[usize], subset: &[usize]) -> Vec<usize> {
    let mut cols = selected.to_vec();
    for &j in subset {
        if !cols.contains(&j) {
            cols.push(j);
        }
    }
    cols
}

/// Per split, fit on `S1 + S^b` using `D1^b` and keep the `S1` coordinates.
pub fn subvector_fit(
    data: &Dataset,
    family: Family,
    selector: &dyn Selector,
    subset: &[usize],
    opts: &SsglmOptions,
) -> Result<SubvectorFit> {
    if subset.is_empty() {
        return Err(Error::InvalidArgument("target subset is empty".into()));
    }
    let p = data.p();
    if let Some(&j) = subset.iter().find(|&&j| j >= p) {
        return Err(Error::InvalidArgument(format!("target column {j} out of range (p = {p})")));
    }
    for (a, &j) in subset.iter().enumerate() {
        if subset[..a].contains(&j) {
            return Err(Error::InvalidArgument(format!("target column {j} listed twice")));
        }
    }
    data.check_family(family)?;
    let plan = make_splits(data.n(), opts.q, opts.b, opts.seed)?;
    if subset.len() + 2 > plan.n1 {
        return Err(Error::InvalidArgument(format!(
            "{} targets do not fit in an estimation half of {}",
            subset.len(),
            plan.n1
        )));
    }
    let fit_opts = opts.fit;
    let rows = with_threads(opts.threads, || {
        (0..plan.n_splits())
            .into_par_iter()
            .map(|b| -> Result<(Vec<usize>, Vec<f64>)> {
                let sel = select_on_split(data, family, selector, &plan, b)?;
                let mut s = sel.selected;
                while union_columns(&s, subset).len() + 2 > plan.n1 {
                    s.pop();
                }
                let (y1, x1) = data.take_rows(&plan.d1[b]);
                let cols = union_columns(&s, subset);
                let est = match fit_mle(&y1, &x1, &cols, family, &fit_opts) {
                    Ok(f) if f.converged => subset
                        .iter()
                        .map(|&j| {
                            let k = cols.iter().position(|&c| c == j).unwrap();
                            f.beta[k + 1]
                        })
                        .collect(),
                    _ => vec![f64::NAN; subset.len()],
                };
                Ok((s, est))
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let mut selected = Vec::with_capacity(rows.len());
    let mut split_estimates = Vec::with_capacity(rows.len());
    let mut failed_splits = Vec::new();
    for (b, (s, e)) in rows.into_iter().enumerate() {
        if e.iter().any(|v| !v.is_finite()) {
            failed_splits.push(b);
        }
        selected.push(s);
        split_estimates.push(e);
    }
    let keep: Vec<usize> = (0..split_estimates.len()).filter(|b| !failed_splits.contains(b)).collect();
    if keep.is_empty() {
        return Err(Error::InvalidArgument("every split failed to fit the target subset".into()));
    }
    let k = subset.len();
    let beta1_hat = (0..k)
        .map(|j| keep.iter().map(|&b| split_estimates[b][j]).sum::<f64>() / keep.len() as f64)
        .collect();
    Ok(SubvectorFit {
        family,
        subset: subset.to_vec(),
        beta1_hat,
        split_estimates,
        selected,
        plan,
        failed_splits,
    })
}

/// `n(n-1)/(n-n1)^2 sum_i cov_i cov_i^T` over the splits without failures.
pub fn subvector_covariance(plan: &SplitPlan, split_estimates: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let keep: Vec<usize> = (0..split_estimates.len())
        .filter(|&b| split_estimates[b].iter().all(|v| v.is_finite()))
        .collect();
    if keep.len() < 2 {
        return Err(Error::TooFewSplits {
            needed: 2,
            got: keep.len(),
        });
    }
    let k = split_estimates[0].len();
    let (plan, values) = if keep.len() == split_estimates.len() {
        (plan.clone(), split_estimates.to_vec())
    } else {
        (plan.subset(&keep), keep.iter().map(|&b| split_estimates[b].clone()).collect())
    };
    let (comps, _, _) = covariance_components(&plan, &values, k)?;
    let f = finite_sample_factor(&plan);
    let mut sigma = DMatrix::zeros(k, k);
    for a in 0..k {
        for b in a..k {
            let v = f * dot(&comps[a], &comps[b]);
            sigma[(a, b)] = v;
            sigma[(b, a)] = v;
        }
    }
    Ok(sigma)
}
