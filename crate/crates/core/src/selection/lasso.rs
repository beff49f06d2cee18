//! L1-penalized GLM path by coordinate descent.
//!
//! Objective at each grid value: `l(b) + lambda * sum_{j>=1} |b_j|`, intercept
//! unpenalized. Each outer step minimizes the penalized quadratic expansion
//! of `l` at the current iterate by cyclic coordinate descent over an active
//! set, then backtracks on the true objective. A grid point is accepted once
//! its Karush-Kuhn-Tucker conditions hold to `kkt_tol` relative accuracy.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::Family;
use crate::glm::loss_from_eta;
use crate::linalg::{column, dot, sum};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LassoOptions {
    pub kkt_tol: f64,
    pub max_outer: usize,
    pub max_sweeps: usize,
    /// Stop the path once the fit saturates: deviance ratio above 0.999,
    /// relative deviance gain below 1e-5, or an active set as large as the
    /// number of observations less one.
    pub early_stop: bool,
    /// Stop after the first grid point whose active set exceeds this size.
    pub max_active: Option<usize>,
}

impl Default for LassoOptions {
    fn default() -> Self {
        LassoOptions {
            kkt_tol: 1e-5,
            max_outer: 100,
            max_sweeps: 20_000,
            early_stop: false,
            max_active: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub lambda: f64,
    pub intercept: f64,
    /// Length-`p` coefficient vector (zeros off the active set).
    pub coefficients: Vec<f64>,
    /// Indices with nonzero coefficient, ascending.
    pub active: Vec<usize>,
    pub converged: bool,
    /// Training deviance at the solution.
    pub deviance: f64,
}

/// Smallest penalty at which the intercept-only fit is optimal:
/// `max_j |x_j^T (ybar - y)| / n`.
pub fn lambda_max(y: &[f64], x: &DMatrix<f64>, family: Family) -> f64 {
    let n = y.len() as f64;
    let _ = family;
    // for every canonical link the intercept-only fitted mean is ybar
    let ybar = sum(y) / n;
    let r: Vec<f64> = y.iter().map(|&v| ybar - v).collect();
    (0..x.ncols())
        .map(|j| dot(column(x, j), &r).abs() / n)
        .fold(0.0, f64::max)
}

/// `n_lambda` log-spaced values from `lmax` down to `ratio * lmax`.
pub fn default_lambda_grid(lmax: f64, n_lambda: usize, ratio: f64) -> Vec<f64> {
    if n_lambda == 1 {
        return vec![lmax];
    }
    let (hi, lo) = (lmax.ln(), (lmax * ratio).ln());
    (0..n_lambda)
        .map(|k| (hi + (lo - hi) * k as f64 / (n_lambda - 1) as f64).exp())
        .collect()
}

fn soft_threshold(u: f64, t: f64) -> f64 {
    if u > t {
        u - t
    } else if u < -t {
        u + t
    } else {
        0.0
    }
}

struct Solver<'a> {
    y: &'a [f64],
    x: &'a DMatrix<f64>,
    family: Family,
    opts: LassoOptions,
    b0: f64,
    beta: Vec<f64>,
    eta: Vec<f64>,
}

impl<'a> Solver<'a> {
    fn n(&self) -> usize {
        self.y.len()
    }

    fn objective(&self, eta: &[f64], beta: &[f64], lambda: f64) -> f64 {
        loss_from_eta(self.family, self.y, eta) + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
    }

    fn gradient(&self, eta: &[f64]) -> (f64, Vec<f64>) {
        let n = self.n() as f64;
        let r: Vec<f64> = eta
            .iter()
            .zip(self.y)
            .map(|(&e, &y)| self.family.mean(e) - y)
            .collect();
        let g0 = sum(&r) / n;
        let g = (0..self.x.ncols()).map(|j| dot(column(self.x, j), &r) / n).collect();
        (g0, g)
    }

    fn kkt_ok(&self, lambda: f64) -> bool {
        let (g0, g) = self.gradient(&self.eta);
        let tol = self.opts.kkt_tol * lambda;
        if g0.abs() > tol {
            return false;
        }
        g.iter().zip(&self.beta).all(|(&gj, &bj)| {
            if bj == 0.0 {
                gj.abs() <= lambda + tol
            } else {
                (gj + lambda * bj.signum()).abs() <= tol
            }
        })
    }

    /// Coordinate descent on the weighted quadratic model; returns the
    /// minimizer `(b0, beta)` of the model.
    fn quadratic_step(&self, lambda: f64) -> (f64, Vec<f64>) {
        let n = self.n();
        let nf = n as f64;
        let p = self.x.ncols();
        let w: Vec<f64> = match self.family {
            Family::Gaussian => vec![1.0; n],
            fam => self.eta.iter().map(|&e| fam.variance(e).max(1e-5)).collect(),
        };
        // res = z - eta', with z the working response and eta' = eta at start
        let mut res: Vec<f64> = self
            .eta
            .iter()
            .zip(self.y)
            .zip(&w)
            .map(|((&e, &y), &wi)| (y - self.family.mean(e)) / wi)
            .collect();
        let sw = sum(&w) / nf;
        let mut b0 = self.b0;
        let mut beta = self.beta.clone();
        let mut v = vec![f64::NAN; p];
        let mut wres = vec![0.0; n];
        let thresh = (1e-2 * self.opts.kkt_tol * lambda).powi(2);
        let mut active: Vec<usize> = (0..p).filter(|&j| beta[j] != 0.0).collect();
        let mut in_active: Vec<bool> = beta.iter().map(|&b| b != 0.0).collect();
        let mut full = true;

        for _ in 0..self.opts.max_sweeps {
            let mut maxdiff: f64 = 0.0;
            let d0 = dot(&w, &res) / nf / sw;
            if d0 != 0.0 {
                b0 += d0;
                for r in res.iter_mut() {
                    *r -= d0;
                }
                maxdiff = maxdiff.max(sw * d0 * d0);
            }
            for (wr, (&wi, &ri)) in wres.iter_mut().zip(w.iter().zip(&res)) {
                *wr = wi * ri;
            }
            let coords: Vec<usize> = if full { (0..p).collect() } else { active.clone() };
            for j in coords {
                let xj = column(self.x, j);
                if v[j].is_nan() {
                    v[j] = xj.iter().zip(&w).map(|(&a, &wi)| wi * a * a).sum::<f64>() / nf;
                }
                if v[j] <= 0.0 {
                    continue;
                }
                let old = beta[j];
                let g = dot(xj, &wres) / nf;
                let new = soft_threshold(g + v[j] * old, lambda) / v[j];
                if new != old {
                    let d = new - old;
                    for ((r, wr), (&a, &wi)) in res.iter_mut().zip(wres.iter_mut()).zip(xj.iter().zip(&w)) {
                        *r -= d * a;
                        *wr = wi * *r;
                    }
                    beta[j] = new;
                    maxdiff = maxdiff.max(v[j] * d * d);
                    if !in_active[j] {
                        in_active[j] = true;
                        active.push(j);
                    }
                }
            }
            if maxdiff <= thresh {
                if full {
                    break;
                }
                full = true;
            } else {
                full = false;
            }
        }
        (b0, beta)
    }

    fn solve(&mut self, lambda: f64) -> bool {
        let n = self.n();
        for _ in 0..self.opts.max_outer {
            if self.kkt_ok(lambda) {
                return true;
            }
            let (b0_new, beta_new) = self.quadratic_step(lambda);
            let f_old = self.objective(&self.eta, &self.beta, lambda);
            let mut t = 1.0;
            let mut accepted = None;
            let mut cand_beta = vec![0.0; beta_new.len()];
            let mut cand_eta = vec![0.0; n];
            for _ in 0..40 {
                let cb0 = self.b0 + t * (b0_new - self.b0);
                for ((c, &b), &bn) in cand_beta.iter_mut().zip(&self.beta).zip(&beta_new) {
                    *c = b + t * (bn - b);
                }
                cand_eta.iter_mut().for_each(|e| *e = cb0);
                for (j, &b) in cand_beta.iter().enumerate() {
                    if b != 0.0 {
                        for (e, &a) in cand_eta.iter_mut().zip(column(self.x, j)) {
                            *e += b * a;
                        }
                    }
                }
                let f_new = self.objective(&cand_eta, &cand_beta, lambda);
                if f_new.is_finite() && f_new <= f_old + 1e-15 * f_old.abs() {
                    accepted = Some(cb0);
                    break;
                }
                t *= 0.5;
            }
            let Some(cb0) = accepted else {
                return self.kkt_ok(lambda);
            };
            self.b0 = cb0;
            std::mem::swap(&mut self.beta, &mut cand_beta);
            std::mem::swap(&mut self.eta, &mut cand_eta);
        }
        self.kkt_ok(lambda)
    }

    fn deviance(&self) -> f64 {
        self.y
            .iter()
            .zip(&self.eta)
            .map(|(&y, &e)| self.family.unit_deviance(y, self.family.mean(e)))
            .sum()
    }
}

/// Warm-started path over a strictly decreasing positive grid.
pub fn lasso_path(
    y: &[f64],
    x: &DMatrix<f64>,
    family: Family,
    grid: &[f64],
    opts: &LassoOptions,
) -> Result<Vec<PathPoint>> {
    lasso_path_until(y, x, family, grid, opts, |_| false)
}

/// [`lasso_path`] that also stops after any point for which `stop` returns true.
pub fn lasso_path_until(
    y: &[f64],
    x: &DMatrix<f64>,
    family: Family,
    grid: &[f64],
    opts: &LassoOptions,
    mut stop: impl FnMut(&PathPoint) -> bool,
) -> Result<Vec<PathPoint>> {
    if x.nrows() != y.len() {
        return Err(Error::Dimension(format!("{} responses for {} rows", y.len(), x.nrows())));
    }
    if y.is_empty() {
        return Err(Error::Dimension("empty response".into()));
    }
    if grid.iter().any(|&l| !(l > 0.0 && l.is_finite())) || grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument(
            "lambda grid must be positive and strictly decreasing".into(),
        ));
    }
    let n = y.len();
    let b0 = family.link(sum(y) / n as f64);
    let mut solver = Solver {
        y,
        x,
        family,
        opts: *opts,
        b0,
        beta: vec![0.0; x.ncols()],
        eta: vec![b0; n],
    };
    let null_dev = solver.deviance();
    let mut path = Vec::with_capacity(grid.len());
    let mut prev_dev = null_dev;
    for &lambda in grid {
        let converged = solver.solve(lambda);
        let deviance = solver.deviance();
        let active: Vec<usize> = (0..x.ncols()).filter(|&j| solver.beta[j] != 0.0).collect();
        let n_active = active.len();
        path.push(PathPoint {
            lambda,
            intercept: solver.b0,
            coefficients: solver.beta.clone(),
            active,
            converged,
            deviance,
        });
        if stop(path.last().unwrap()) || opts.max_active.is_some_and(|m| n_active > m) {
            break;
        }
        if opts.early_stop && null_dev > 0.0 {
            let ratio = 1.0 - deviance / null_dev;
            let gain = (prev_dev - deviance) / null_dev;
            if ratio > 0.999 || (path.len() > 5 && gain < 1e-5) || n_active + 1 >= n {
                break;
            }
        }
        prev_dev = deviance;
    }
    Ok(path)
}
