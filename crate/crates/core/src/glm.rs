//! Partial regressions: likelihood, score, observed information and
//! low-dimensional maximum-likelihood fitting.
//!
//! All quantities are on the per-observation scale,
//! `l_S(b) = n^{-1} sum_i { A(xbar_i b) - y_i xbar_i b }`.

use nalgebra::{Cholesky, DMatrix, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{Family, POISSON_THETA_MAX};
use crate::linalg::{self, cholesky, cross, dot, linear_predictor, max_abs, solve, weighted_gram};

/// Relative pivot tolerance used to declare an information matrix singular.
pub(crate) const PIVOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iter: usize,
    pub score_tol: f64,
    pub ridge_fallback: bool,
    /// Any coefficient beyond this magnitude is treated as divergence.
    pub divergence_bound: f64,
    pub ridge: f64,
    pub max_halvings: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iter: 100,
            score_tol: 1e-8,
            ridge_fallback: true,
            divergence_bound: 30.0,
            ridge: 1e-6,
            max_halvings: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialFit {
    /// Column indices of the design, in coefficient order after the intercept.
    pub subset: Vec<usize>,
    /// Intercept first, then one coefficient per entry of `subset`.
    pub beta: Vec<f64>,
    /// Unpenalized `l_S` at `beta`.
    pub neg_loglik: f64,
    /// Observed information `n^{-1} Xbar^T V Xbar` at `beta`.
    pub info: DMatrix<f64>,
    /// The minimized objective reached the score tolerance. For a stabilized
    /// fit this refers to the ridge-penalized objective.
    pub converged: bool,
    pub iterations: usize,
    /// The ridge fallback produced `beta`.
    pub stabilized: bool,
}

impl PartialFit {
    /// Coefficient of design column `j`, if `j` is in the subset.
    pub fn coef(&self, j: usize) -> Option<f64> {
        self.subset.iter().position(|&s| s == j).map(|k| self.beta[k + 1])
    }

    pub fn intercept(&self) -> f64 {
        self.beta[0]
    }
}

fn check_dims(beta: &[f64], y: &[f64], cols: &[&[f64]]) -> Result<()> {
    if beta.len() != cols.len() + 1 {
        return Err(Error::Dimension(format!(
            "coefficient vector has length {} but design has {} columns plus intercept",
            beta.len(),
            cols.len()
        )));
    }
    if let Some(c) = cols.iter().find(|c| c.len() != y.len()) {
        return Err(Error::Dimension(format!(
            "design column has {} rows but response has {}",
            c.len(),
            y.len()
        )));
    }
    if y.is_empty() {
        return Err(Error::Dimension("empty response".into()));
    }
    Ok(())
}

/// Loss from a precomputed linear predictor. Poisson arguments are clamped.
pub(crate) fn loss_from_eta(family: Family, y: &[f64], eta: &[f64]) -> f64 {
    let mut s = 0.0;
    for (&yi, &e) in y.iter().zip(eta) {
        s += family.cumulant(e) - yi * e;
    }
    s / y.len() as f64
}

/// `l_S(beta)` for the sub-design given as columns (intercept implicit).
pub fn neg_log_likelihood(beta: &[f64], y: &[f64], cols: &[&[f64]], family: Family) -> Result<f64> {
    check_dims(beta, y, cols)?;
    let mut eta = Vec::new();
    linear_predictor(beta, cols, y.len(), &mut eta);
    if family == Family::Poisson {
        if let Some(&t) = eta.iter().find(|&&t| t > POISSON_THETA_MAX) {
            return Err(Error::NonFiniteCumulant {
                family: family.name(),
                theta: t,
            });
        }
    }
    Ok(loss_from_eta(family, y, &eta))
}

/// Score `U_S` and observed information `I_S` at `beta`.
pub fn score_and_information(
    beta: &[f64],
    y: &[f64],
    cols: &[&[f64]],
    family: Family,
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    check_dims(beta, y, cols)?;
    let mut eta = Vec::new();
    linear_predictor(beta, cols, y.len(), &mut eta);
    let resid: Vec<f64> = eta.iter().zip(y).map(|(&e, &yi)| family.mean(e) - yi).collect();
    let w: Vec<f64> = eta.iter().map(|&e| family.variance(e)).collect();
    Ok((cross(cols, &resid), weighted_gram(cols, &w)))
}

/// Fit the partial regression of `y` on columns `subset` of `x`.
pub fn fit_mle(
    y: &[f64],
    x: &DMatrix<f64>,
    subset: &[usize],
    family: Family,
    opts: &FitOptions,
) -> Result<PartialFit> {
    if let Some(&j) = subset.iter().find(|&&j| j >= x.ncols()) {
        return Err(Error::Dimension(format!("column {j} out of range for {} columns", x.ncols())));
    }
    let cols = linalg::columns(x, subset);
    let mut fit = fit_columns(y, &cols, family, opts)?;
    fit.subset = subset.to_vec();
    Ok(fit)
}

/// As [`fit_mle`] for a design given directly as columns. `subset` of the
/// result is `0..cols.len()`.
pub fn fit_columns(y: &[f64], cols: &[&[f64]], family: Family, opts: &FitOptions) -> Result<PartialFit> {
    let k = cols.len() + 1;
    let start = initial_beta(family, y, k);
    check_dims(&start, y, cols)?;
    if k >= y.len() {
        return Err(Error::RankDeficient(format!(
            "{k} coefficients for {} observations",
            y.len()
        )));
    }

    let fit = if family == Family::Gaussian {
        least_squares(y, cols, opts)?
    } else {
        match newton(y, cols, family, opts, 0.0, start.clone(), true)? {
            Newton::Done(state) => state.into_fit(y, cols, family, false),
            Newton::Diverged(state) if !opts.ridge_fallback => state.into_fit(y, cols, family, false),
            Newton::Diverged(_) => {
                let ridge_opts = FitOptions {
                    max_iter: opts.max_iter.max(200),
                    ..*opts
                };
                match newton(y, cols, family, &ridge_opts, opts.ridge, start, false)? {
                    Newton::Done(state) | Newton::Diverged(state) => state.into_fit(y, cols, family, true),
                }
            }
        }
    };
    Ok(PartialFit {
        subset: (0..cols.len()).collect(),
        ..fit
    })
}

/// Intercept at `g(mean(y))`, every slope at zero.
pub(crate) fn initial_beta(family: Family, y: &[f64], k: usize) -> Vec<f64> {
    let mean = if y.is_empty() { 0.0 } else { linalg::sum(y) / y.len() as f64 };
    let mut b = vec![0.0; k];
    b[0] = family.link(mean);
    b
}

fn least_squares(y: &[f64], cols: &[&[f64]], opts: &FitOptions) -> Result<PartialFit> {
    let n = y.len();
    let g = weighted_gram(cols, &vec![1.0; n]);
    let chol = cholesky(g.clone(), PIVOT_TOL)
        .ok_or_else(|| Error::RankDeficient(format!("{} columns are linearly dependent", cols.len())))?;
    let rhs = cross(cols, y);
    let mut beta = solve(&chol, &rhs);
    let mut eta = Vec::with_capacity(n);
    let mut score = vec![0.0; beta.len()];
    for _ in 0..3 {
        linear_predictor(&beta, cols, n, &mut eta);
        let resid: Vec<f64> = eta.iter().zip(y).map(|(e, yi)| e - yi).collect();
        score = cross(cols, &resid);
        if max_abs(&score) <= opts.score_tol {
            break;
        }
        let delta = solve(&chol, &score);
        for (b, d) in beta.iter_mut().zip(&delta) {
            *b -= d;
        }
    }
    Ok(PartialFit {
        subset: Vec::new(),
        neg_loglik: loss_from_eta(Family::Gaussian, y, &eta),
        info: g,
        converged: max_abs(&score) <= opts.score_tol,
        iterations: 1,
        stabilized: false,
        beta,
    })
}

pub(crate) struct NewtonState {
    pub beta: Vec<f64>,
    pub eta: Vec<f64>,
    #[allow(dead_code)]
    pub loss: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Penalized loss after each accepted iterate, starting point included.
    #[allow(dead_code)]
    pub trace: Vec<f64>,
}

impl NewtonState {
    fn into_fit(self, y: &[f64], cols: &[&[f64]], family: Family, stabilized: bool) -> PartialFit {
        let w: Vec<f64> = self.eta.iter().map(|&e| family.variance(e)).collect();
        PartialFit {
            subset: Vec::new(),
            neg_loglik: loss_from_eta(family, y, &self.eta),
            info: weighted_gram(cols, &w),
            converged: self.converged,
            iterations: self.iterations,
            stabilized,
            beta: self.beta,
        }
    }
}

pub(crate) enum Newton {
    Done(NewtonState),
    Diverged(NewtonState),
}

fn penalized(loss: f64, beta: &[f64], ridge: f64) -> f64 {
    if ridge == 0.0 {
        loss
    } else {
        loss + 0.5 * ridge * beta.iter().map(|b| b * b).sum::<f64>()
    }
}

/// Damped Newton iteration on `l_S(b) + ridge/2 |b|^2`. Every accepted
/// iterate does not increase the objective; the only exception is a full
/// step taken when the predicted decrease is below rounding noise and the
/// score shrinks.
pub(crate) fn newton(
    y: &[f64],
    cols: &[&[f64]],
    family: Family,
    opts: &FitOptions,
    ridge: f64,
    start: Vec<f64>,
    detect_divergence: bool,
) -> Result<Newton> {
    let n = y.len();
    let mut beta = start;
    let mut eta = Vec::with_capacity(n);
    linear_predictor(&beta, cols, n, &mut eta);
    let mut obj = penalized(loss_from_eta(family, y, &eta), &beta, ridge);
    let mut trace = vec![obj];
    let mut cand = vec![0.0; beta.len()];
    let mut eta_c = Vec::with_capacity(n);
    let mut resid = vec![0.0; n];
    let mut w = vec![0.0; n];

    let gradient = |eta: &[f64], beta: &[f64], resid: &mut [f64]| {
        for ((r, &e), &yi) in resid.iter_mut().zip(eta).zip(y) {
            *r = family.mean(e) - yi;
        }
        let mut g = cross(cols, resid);
        if ridge != 0.0 {
            for (gk, bk) in g.iter_mut().zip(beta) {
                *gk += ridge * bk;
            }
        }
        g
    };

    let mut grad = gradient(&eta, &beta, &mut resid);
    let mut iterations = 0;
    let mut converged = max_abs(&grad) <= opts.score_tol;
    while !converged && iterations < opts.max_iter {
        for (wi, &e) in w.iter_mut().zip(&eta) {
            *wi = family.variance(e);
        }
        let mut h = weighted_gram(cols, &w);
        for d in 0..h.nrows() {
            h[(d, d)] += ridge;
        }
        let Some(chol) = cholesky(h, PIVOT_TOL) else {
            let plain = weighted_gram(cols, &vec![1.0; n]);
            if cholesky(plain, PIVOT_TOL).is_none() {
                return Err(Error::RankDeficient(format!(
                    "{} columns are linearly dependent",
                    cols.len()
                )));
            }
            // full-rank design with a degenerate weighted information: the
            // fitted means have saturated
            let state = NewtonState {
                beta,
                eta,
                loss: obj,
                converged: false,
                iterations,
                trace,
            };
            return Ok(Newton::Diverged(state));
        };
        let step = solve(&chol, &grad);
        let predicted: f64 = grad.iter().zip(&step).map(|(g, s)| g * s).sum();

        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=opts.max_halvings {
            for ((c, b), s) in cand.iter_mut().zip(&beta).zip(&step) {
                *c = b - t * s;
            }
            linear_predictor(&cand, cols, n, &mut eta_c);
            let obj_c = penalized(loss_from_eta(family, y, &eta_c), &cand, ridge);
            if obj_c.is_finite() && obj_c <= obj {
                obj = obj_c;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            if 0.5 * predicted.abs() > 1e-13 * obj.abs().max(1.0) {
                break;
            }
            for ((c, b), s) in cand.iter_mut().zip(&beta).zip(&step) {
                *c = b - s;
            }
            linear_predictor(&cand, cols, n, &mut eta_c);
            let g_c = gradient(&eta_c, &cand, &mut resid);
            if !(max_abs(&g_c) < max_abs(&grad)) {
                break;
            }
            obj = penalized(loss_from_eta(family, y, &eta_c), &cand, ridge);
        }
        std::mem::swap(&mut beta, &mut cand);
        std::mem::swap(&mut eta, &mut eta_c);
        trace.push(obj);
        iterations += 1;
        grad = gradient(&eta, &beta, &mut resid);
        converged = max_abs(&grad) <= opts.score_tol;

        if detect_divergence && diverging(family, &beta, &eta, opts.divergence_bound) {
            let state = NewtonState {
                beta,
                eta,
                loss: obj,
                converged: false,
                iterations,
                trace,
            };
            return Ok(Newton::Diverged(state));
        }
    }
    let state = NewtonState {
        beta,
        eta,
        loss: obj,
        converged,
        iterations,
        trace,
    };
    if detect_divergence && diverging(family, &state.beta, &state.eta, opts.divergence_bound) {
        return Ok(Newton::Diverged(state));
    }
    Ok(Newton::Done(state))
}

/// Coefficients beyond `bound`, or fitted means pinned to the edge of the
/// parameter space (a binomial linear predictor beyond `bound` in magnitude,
/// a Poisson one below `-bound`). The latter catches quasi-separation, where
/// the score vanishes long before the coefficients grow large.
fn diverging(family: Family, beta: &[f64], eta: &[f64], bound: f64) -> bool {
    if max_abs(beta) > bound {
        return true;
    }
    match family {
        Family::Gaussian => false,
        Family::BinomialLogit => eta.iter().any(|e| e.abs() > bound),
        Family::Poisson => eta.iter().any(|&e| e < -bound),
    }
}

/// Converged `S + {j}` fit: the new coefficient and the loss.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Extension {
    pub coef: f64,
    pub loss: f64,
}

/// Partial-regression state at the converged fit on `S`, reused as the
/// starting point of every `S + {j}` fit.
pub(crate) struct Augmenter<'a> {
    cols: Vec<&'a [f64]>,
    beta: Vec<f64>,
    eta: Vec<f64>,
    resid: Vec<f64>,
    w: Vec<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl<'a> Augmenter<'a> {
    pub(crate) fn new(y: &[f64], cols: Vec<&'a [f64]>, fit: &PartialFit, family: Family) -> Option<Self> {
        let chol = cholesky(fit.info.clone(), PIVOT_TOL)?;
        let mut eta = Vec::with_capacity(y.len());
        linear_predictor(&fit.beta, &cols, y.len(), &mut eta);
        let resid = eta.iter().zip(y).map(|(&e, &yi)| family.mean(e) - yi).collect();
        let w = eta.iter().map(|&e| family.variance(e)).collect();
        Some(Augmenter {
            cols,
            beta: fit.beta.clone(),
            eta,
            resid,
            w,
            chol,
        })
    }

    /// Coefficient of `xj` in the MLE on `S + {j}` by a chord iteration
    /// (Newton with the Hessian frozen at the `S` fit, augmented by one
    /// bordered row). Returns `None` whenever it cannot certify the score
    /// tolerance, in which case the caller refits from scratch.
    pub(crate) fn extend(&self, y: &[f64], xj: &[f64], family: Family, opts: &FitOptions) -> Option<Extension> {
        let n = y.len();
        let nf = n as f64;
        let wx: Vec<f64> = self.w.iter().zip(xj).map(|(w, x)| w * x).collect();
        let c = cross(&self.cols, &wx);
        let d = dot(&wx, xj) / nf;
        let z = solve(&self.chol, &c);
        let schur = d - dot(&c, &z);
        if !(schur > 1e-10 * d) {
            return None;
        }

        let mut gamma = self.beta.clone();
        let mut delta = 0.0;
        let mut eta = self.eta.clone();
        let mut resid = self.resid.clone();
        let mut g_s = cross(&self.cols, &resid);
        let mut g_j = dot(xj, &resid) / nf;
        let mut gnorm = max_abs(&g_s).max(g_j.abs());
        let mut stalls = 0;
        for _ in 0..60 {
            if gnorm <= opts.score_tol {
                let pinned = match family {
                    Family::Gaussian => false,
                    Family::BinomialLogit => eta.iter().any(|e| e.abs() > opts.divergence_bound),
                    Family::Poisson => eta.iter().any(|&e| e < -opts.divergence_bound),
                };
                return (!pinned).then(|| Extension {
                    coef: delta,
                    loss: loss_from_eta(family, y, &eta),
                });
            }
            let a_inv_g = solve(&self.chol, &g_s);
            let step_j = (g_j - dot(&z, &g_s)) / schur;
            for ((g, a), zk) in gamma.iter_mut().zip(&a_inv_g).zip(&z) {
                *g -= a - zk * step_j;
            }
            delta -= step_j;
            if !delta.is_finite() || delta.abs() > opts.divergence_bound || max_abs(&gamma) > opts.divergence_bound
            {
                return None;
            }
            linear_predictor(&gamma, &self.cols, n, &mut eta);
            for (e, &x) in eta.iter_mut().zip(xj) {
                *e += delta * x;
            }
            for ((r, &e), &yi) in resid.iter_mut().zip(&eta).zip(y) {
                *r = family.mean(e) - yi;
            }
            g_s = cross(&self.cols, &resid);
            g_j = dot(xj, &resid) / nf;
            let next = max_abs(&g_s).max(g_j.abs());
            if !next.is_finite() {
                return None;
            }
            if next > 0.7 * gnorm {
                stalls += 1;
                if stalls > 3 {
                    return None;
                }
            }
            gnorm = next;
        }
        None
    }
}
