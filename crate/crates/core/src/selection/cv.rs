use nalgebra::DMatrix;
use rand::seq::SliceRandom;

use super::lasso::{default_lambda_grid, lambda_max, lasso_path, LassoOptions};
use super::{SelectionResult, Selector};
use crate::error::{Error, Result};
use crate::family::Family;
use crate::rng::Stream;

/// K-fold cross-validated LASSO. Picks the grid value with the smallest mean
/// held-out deviance and returns the active set of the full-data fit there,
/// truncated to the `n / 2` largest coefficients. Paths stop once more than
/// `n / 2` predictors are active.
pub fn cv_select(
    y: &[f64],
    x: &DMatrix<f64>,
    family: Family,
    folds: usize,
    lambda_grid: Option<&[f64]>,
    stream: Stream,
) -> Result<SelectionResult> {
    let n = y.len();
    if folds < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 folds, got {folds}")));
    }
    if folds > n {
        return Err(Error::InvalidArgument(format!("{folds} folds for {n} observations")));
    }
    if x.nrows() != n {
        return Err(Error::Dimension(format!("{n} responses for {} rows", x.nrows())));
    }
    let grid: Vec<f64> = match lambda_grid {
        Some(g) => g.to_vec(),
        None => {
            let lmax = lambda_max(y, x, family);
            if !(lmax > 0.0) {
                return Ok(SelectionResult {
                    selected: Vec::new(),
                    scores: Some(vec![0.0; x.ncols()]),
                    lambda: None,
                    warnings: vec!["no predictor is associated with the response".into()],
                });
            }
            default_lambda_grid(lmax, 100, 1e-3)
        }
    };
    let opts = LassoOptions {
        early_stop: true,
        max_active: Some(n / 2),
        ..LassoOptions::default()
    };

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream.rng());
    let mut fold_of = vec![0usize; n];
    for (pos, &i) in order.iter().enumerate() {
        fold_of[i] = pos % folds;
    }

    let full = lasso_path(y, x, family, &grid, &opts)?;
    let mut usable = full.len();
    let mut loss = vec![0.0; grid.len()];
    let mut warnings = Vec::new();
    for k in 0..folds {
        let train: Vec<usize> = (0..n).filter(|&i| fold_of[i] != k).collect();
        let test: Vec<usize> = (0..n).filter(|&i| fold_of[i] == k).collect();
        let (ytr, xtr) = take(y, x, &train);
        let path = lasso_path(&ytr, &xtr, family, &grid[..usable], &opts)?;
        usable = usable.min(path.len());
        for (l, pt) in path.iter().enumerate().take(usable) {
            if !pt.converged {
                warnings.push(format!("fold {k}: lambda {} did not converge", pt.lambda));
            }
            let mut dev = 0.0;
            for &i in &test {
                let mut eta = pt.intercept;
                for &j in &pt.active {
                    eta += pt.coefficients[j] * x[(i, j)];
                }
                dev += family.unit_deviance(y[i], family.mean(eta));
            }
            loss[l] += dev;
        }
    }
    let best = (0..usable)
        .min_by(|&a, &b| loss[a].partial_cmp(&loss[b]).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap_or(0);
    let chosen = &full[best];
    if !chosen.converged {
        warnings.push(format!("full-data fit at lambda {} did not converge", chosen.lambda));
    }
    let scores: Vec<f64> = chosen.coefficients.iter().map(|b| b.abs()).collect();
    let result = SelectionResult {
        selected: chosen.active.clone(),
        scores: Some(scores),
        lambda: Some(chosen.lambda),
        warnings,
    };
    Ok(result.capped(n / 2))
}

fn take(y: &[f64], x: &DMatrix<f64>, rows: &[usize]) -> (Vec<f64>, DMatrix<f64>) {
    let yy = rows.iter().map(|&i| y[i]).collect();
    let xx = DMatrix::from_fn(rows.len(), x.ncols(), |r, j| x[(rows[r], j)]);
    (yy, xx)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvLasso {
    pub folds: usize,
    pub n_lambda: usize,
    pub ratio: f64,
}

impl Default for CvLasso {
    fn default() -> Self {
        CvLasso {
            folds: 10,
            n_lambda: 100,
            ratio: 1e-3,
        }
    }
}

impl Selector for CvLasso {
    fn select(&self, y: &[f64], x: &DMatrix<f64>, family: Family, stream: Stream) -> Result<SelectionResult> {
        let lmax = lambda_max(y, x, family);
        if !(lmax > 0.0) {
            return cv_select(y, x, family, self.folds, None, stream);
        }
        let grid = default_lambda_grid(lmax, self.n_lambda, self.ratio);
        cv_select(y, x, family, self.folds, Some(&grid), stream)
    }

    fn name(&self) -> String {
        format!("lasso-cv(folds={})", self.folds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn deterministic_given_stream() {
        let mut rng = Stream::new(11).rng();
        let x = DMatrix::from_fn(90, 25, |_, _| { let v: f64 = StandardNormal.sample(&mut rng); v });
        let y: Vec<f64> = (0..90)
            .map(|i| {
                let eta = x[(i, 3)] - x[(i, 7)];
                (rng.random::<f64>() < 1.0 / (1.0 + (-eta).exp())) as u8 as f64
            })
            .collect();
        let s = Stream::new(5).named("cv");
        let a = cv_select(&y, &x, Family::BinomialLogit, 5, None, s).unwrap();
        let b = cv_select(&y, &x, Family::BinomialLogit, 5, None, s).unwrap();
        assert_eq!(a, b);
        assert!(a.selected.contains(&3) && a.selected.contains(&7));
        assert!(a.selected.len() <= 45);
    }

    #[test]
    fn fold_count_is_validated() {
        let x = DMatrix::zeros(4, 2);
        let y = vec![0.0; 4];
        assert!(cv_select(&y, &x, Family::Gaussian, 1, None, Stream::new(0)).is_err());
        assert!(cv_select(&y, &x, Family::Gaussian, 5, None, Stream::new(0)).is_err());
    }

    #[test]
    fn pure_noise_may_select_nothing() {
        let x = DMatrix::zeros(20, 3);
        let y: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let r = cv_select(&y, &x, Family::Gaussian, 4, None, Stream::new(0)).unwrap();
        assert!(r.selected.is_empty());
    }
}
