//! One-time estimator and the smoothed (split-averaged) estimator.
//!
//! For one split, selection runs on `D2` only and every coefficient is
//! estimated on `D1` only: coordinate `j` comes from the partial regression
//! on `S + {j}`, the intercept from the regression on `S`. Averaging the
//! per-split vectors over `B` splits gives the smoothed estimate.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::family::Family;
use crate::glm::{fit_mle, Augmenter, FitOptions};
use crate::linalg;
use crate::rng::Stream;
use crate::selection::{SelectionResult, Selector};
use crate::split::{make_splits, SplitPlan};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneTimeEstimate {
    /// Intercept first, then one entry per column; NaN where the fit failed.
    pub beta_tilde: Vec<f64>,
    /// Coefficient slots (0 = intercept, `j + 1` = column `j`) without an estimate.
    pub failed: Vec<usize>,
    pub stabilized_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitEstimate {
    pub b: usize,
    pub selected: Vec<usize>,
    pub beta_tilde: Vec<f64>,
    pub stabilized_count: usize,
    pub failed: Vec<usize>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothedFit {
    pub family: Family,
    /// Intercept first, then one entry per column.
    pub beta_hat: Vec<f64>,
    pub splits: Vec<SplitEstimate>,
    pub plan: SplitPlan,
    /// Fraction of splits whose selected set contains column `j`.
    pub selection_freq: Vec<f64>,
    /// Number of splits contributing to each coefficient slot.
    pub effective_b: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsglmOptions {
    pub q: f64,
    pub b: usize,
    pub seed: u64,
    /// Worker threads; `None` uses the ambient rayon pool.
    pub threads: Option<usize>,
    pub fit: FitOptions,
}

impl Default for SsglmOptions {
    fn default() -> Self {
        SsglmOptions {
            q: 0.5,
            b: 500,
            seed: 1,
            threads: None,
            fit: FitOptions::default(),
        }
    }
}

/// Run `f` on a dedicated pool when a thread count is given.
pub(crate) fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// One-time estimate on the estimation half `(y1, x1)` given the selected set `s`.
pub fn one_time_estimate(
    y1: &[f64],
    x1: &DMatrix<f64>,
    s: &[usize],
    family: Family,
    opts: &FitOptions,
) -> Result<OneTimeEstimate> {
    let p = x1.ncols();
    if x1.nrows() != y1.len() {
        return Err(Error::Dimension(format!("{} responses for {} rows", y1.len(), x1.nrows())));
    }
    if let Some(&j) = s.iter().find(|&&j| j >= p) {
        return Err(Error::Dimension(format!("selected column {j} out of range")));
    }
    let mut beta = vec![f64::NAN; p + 1];
    let mut failed = Vec::new();
    let mut stabilized_count = 0;
    let mut in_s = vec![false; p];
    for &j in s {
        in_s[j] = true;
    }

    let base_fit = fit_mle(y1, x1, s, family, opts);
    let mut base = None;
    match &base_fit {
        Ok(fit) if fit.converged => {
            beta[0] = fit.beta[0];
            for (k, &j) in s.iter().enumerate() {
                beta[j + 1] = fit.beta[k + 1];
            }
            if fit.stabilized {
                stabilized_count += 1;
            } else {
                base = Augmenter::new(y1, linalg::columns(x1, s), fit, family);
            }
        }
        _ => {
            failed.push(0);
            failed.extend(s.iter().map(|&j| j + 1));
        }
    }

    let mut augmented: Vec<usize> = s.to_vec();
    augmented.push(usize::MAX);
    for j in 0..p {
        if in_s[j] {
            continue;
        }
        let fast = base
            .as_ref()
            .and_then(|b| b.extend(y1, linalg::column(x1, j), family, opts))
            .map(|e| e.coef);
        if let Some(v) = fast {
            beta[j + 1] = v;
            continue;
        }
        *augmented.last_mut().unwrap() = j;
        match fit_mle(y1, x1, &augmented, family, opts) {
            Ok(fit) if fit.converged => {
                beta[j + 1] = fit.beta[s.len() + 1];
                if fit.stabilized {
                    stabilized_count += 1;
                }
            }
            _ => failed.push(j + 1),
        }
    }
    failed.sort_unstable();
    Ok(OneTimeEstimate {
        beta_tilde: beta,
        failed,
        stabilized_count,
    })
}

/// Selection on `D2^b` with one retry on a fresh substream, capped at `n1 / 2`.
pub(crate) fn select_on_split(
    data: &Dataset,
    family: Family,
    selector: &dyn Selector,
    plan: &SplitPlan,
    b: usize,
) -> Result<SelectionResult> {
    let d2 = plan.d2(b);
    let (y2, x2) = data.take_rows(&d2);
    let stream = Stream::new(plan.seed).child(b as u64).named("cv");
    let sel = match selector.select(&y2, &x2, family, stream) {
        Ok(s) => s,
        Err(first) => {
            let retry = Stream::new(plan.seed).child(b as u64).named("cv-retry");
            selector.select(&y2, &x2, family, retry).map_err(|second| Error::SelectionFailed {
                split: b,
                reason: format!("{first}; retry: {second}"),
            })?
        }
    };
    let mut sel = sel.capped(plan.n1 / 2);
    if sel.selected.len() * 4 > plan.n1 {
        let msg = format!(
            "split {b}: |S| = {} exceeds n1/4 = {}",
            sel.selected.len(),
            plan.n1 / 4
        );
        log::warn!("{msg}");
        sel.warnings.push(msg);
    }
    Ok(sel)
}

fn run_split(
    data: &Dataset,
    family: Family,
    selector: &dyn Selector,
    plan: &SplitPlan,
    b: usize,
    fit: &FitOptions,
) -> Result<SplitEstimate> {
    let sel = select_on_split(data, family, selector, plan, b)?;
    let (y1, x1) = data.take_rows(&plan.d1[b]);
    let est = one_time_estimate(&y1, &x1, &sel.selected, family, fit)?;
    Ok(SplitEstimate {
        b,
        selected: sel.selected,
        beta_tilde: est.beta_tilde,
        stabilized_count: est.stabilized_count,
        failed: est.failed,
        warnings: sel.warnings,
    })
}

/// Smoothed estimator over `opts.b` random splits.
pub fn ssglm_fit(data: &Dataset, family: Family, selector: &dyn Selector, opts: &SsglmOptions) -> Result<SmoothedFit> {
    data.check_family(family)?;
    let plan = make_splits(data.n(), opts.q, opts.b, opts.seed)?;
    let fit = opts.fit;
    let splits = with_threads(opts.threads, || {
        (0..plan.n_splits())
            .into_par_iter()
            .map(|b| run_split(data, family, selector, &plan, b, &fit))
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(assemble(family, data.p(), plan, splits))
}

/// Fixed-order reduction of split estimates into the smoothed fit.
pub fn assemble(family: Family, p: usize, plan: SplitPlan, splits: Vec<SplitEstimate>) -> SmoothedFit {
    let mut total = vec![0.0; p + 1];
    let mut count = vec![0usize; p + 1];
    let mut freq = vec![0.0; p];
    for s in &splits {
        for (k, &v) in s.beta_tilde.iter().enumerate() {
            if v.is_finite() {
                total[k] += v;
                count[k] += 1;
            }
        }
        for &j in &s.selected {
            freq[j] += 1.0;
        }
    }
    let b = splits.len().max(1) as f64;
    let beta_hat = total
        .iter()
        .zip(&count)
        .map(|(&t, &c)| if c > 0 { t / c as f64 } else { f64::NAN })
        .collect();
    SmoothedFit {
        family,
        beta_hat,
        selection_freq: freq.into_iter().map(|f| f / b).collect(),
        effective_b: count,
        splits,
        plan,
    }
}

impl SmoothedFit {
    /// `B x (p + 1)` matrix of split estimates, row-major.
    pub fn estimate_matrix(&self) -> Vec<Vec<f64>> {
        self.splits.iter().map(|s| s.beta_tilde.clone()).collect()
    }

    pub fn stabilized_total(&self) -> usize {
        self.splits.iter().map(|s| s.stabilized_count).sum()
    }
}
