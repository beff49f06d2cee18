use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};

use super::scenario::{Correlation, SimFamily, TruthSpec};
use crate::error::{Error, Result};
use crate::family::expit;
use crate::rng::Stream;

/// Largest linear predictor accepted for count responses.
const MAX_LOG_MEAN: f64 = 40.0;

fn std_normal(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// `n` independent `N(0, Sigma)` rows, columns centered afterwards.
pub fn gen_design(n: usize, p: usize, correlation: Correlation, stream: Stream) -> Result<DMatrix<f64>> {
    let mut rng = stream.rng();
    let mut x = DMatrix::zeros(n, p);
    match correlation {
        Correlation::Identity => {
            for v in x.iter_mut() {
                *v = std_normal(&mut rng);
            }
        }
        Correlation::Ar1 { rho } => {
            if !(rho > -1.0 && rho < 1.0) {
                return Err(Error::InvalidArgument(format!("AR(1) rho = {rho} outside (-1, 1)")));
            }
            // lower-triangular factor of the AR(1) matrix applied row by row
            let s = (1.0 - rho * rho).sqrt();
            for i in 0..n {
                let mut prev = std_normal(&mut rng);
                x[(i, 0)] = prev;
                for j in 1..p {
                    prev = rho * prev + s * std_normal(&mut rng);
                    x[(i, j)] = prev;
                }
            }
        }
        Correlation::Cs { rho } => {
            let lower = if p > 1 { -1.0 / (p as f64 - 1.0) } else { -1.0 };
            if !(rho > lower && rho < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "compound symmetry with rho = {rho} is not positive definite for p = {p}"
                )));
            }
            if rho >= 0.0 {
                let (a, b) = (rho.sqrt(), (1.0 - rho).sqrt());
                for i in 0..n {
                    let common = std_normal(&mut rng);
                    for j in 0..p {
                        x[(i, j)] = a * common + b * std_normal(&mut rng);
                    }
                }
            } else {
                let sigma = DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { rho });
                let l = sigma
                    .cholesky()
                    .ok_or_else(|| Error::InvalidArgument("compound-symmetry matrix is not positive definite".into()))?
                    .unpack();
                let z = DMatrix::from_fn(n, p, |_, _| std_normal(&mut rng));
                x = z * l.transpose();
            }
        }
    }
    for mut col in x.column_iter_mut() {
        let m = col.sum() / n as f64;
        col.add_scalar_mut(-m);
    }
    Ok(x)
}

/// Intercept-first truth vector of length `p + 1` and the 0-based support.
pub fn gen_truth(p: usize, spec: &TruthSpec, stream: Stream) -> Result<(Vec<f64>, Vec<usize>)> {
    let mut beta = vec![0.0; p + 1];
    let mut rng = stream.rng();
    let mut support = Vec::new();
    match spec {
        TruthSpec::Fixed {
            indices,
            values,
            intercept,
        } => {
            if indices.len() != values.len() {
                return Err(Error::Scenario(format!("{} indices for {} values", indices.len(), values.len())));
            }
            beta[0] = *intercept;
            for (&j, &v) in indices.iter().zip(values) {
                if j == 0 || j > p {
                    return Err(Error::Scenario(format!("truth index {j} outside 1..={p}")));
                }
                beta[j] = v;
                if v != 0.0 {
                    support.push(j - 1);
                }
            }
        }
        TruthSpec::Random {
            s0,
            low,
            high,
            intercept,
        } => {
            if *s0 > p {
                return Err(Error::Scenario(format!("s0 = {s0} exceeds p = {p}")));
            }
            beta[0] = *intercept;
            for j in sample(&mut rng, p, *s0).into_vec() {
                let mag = low + (high - low) * rng.random::<f64>();
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                beta[j + 1] = sign * mag;
                support.push(j);
            }
        }
        TruthSpec::NonSparse {
            small,
            bound,
            big,
            intercept,
        } => {
            let total = small + big.len();
            if total > p {
                return Err(Error::Scenario(format!("{total} signals exceed p = {p}")));
            }
            beta[0] = *intercept;
            let idx = sample(&mut rng, p, total).into_vec();
            for (k, &j) in idx.iter().enumerate() {
                beta[j + 1] = if k < big.len() {
                    big[k]
                } else {
                    bound * (2.0 * rng.random::<f64>() - 1.0)
                };
                support.push(j);
            }
        }
        TruthSpec::Zero { intercept } => beta[0] = *intercept,
    }
    support.sort_unstable();
    Ok((beta, support))
}

/// Linear predictor `beta0 + x beta`.
pub fn linear_predictor(x: &DMatrix<f64>, beta: &[f64]) -> Vec<f64> {
    (0..x.nrows())
        .map(|i| {
            let mut e = beta[0];
            for (j, &b) in beta[1..].iter().enumerate() {
                if b != 0.0 {
                    e += b * x[(i, j)];
                }
            }
            e
        })
        .collect()
}

pub fn gen_response(
    x: &DMatrix<f64>,
    beta: &[f64],
    family: SimFamily,
    dispersion: f64,
    stream: Stream,
) -> Result<Vec<f64>> {
    if beta.len() != x.ncols() + 1 {
        return Err(Error::Dimension(format!("truth of length {} for {} columns", beta.len(), x.ncols())));
    }
    let mut rng = stream.rng();
    let eta = linear_predictor(x, beta);
    let check = |e: f64| -> Result<f64> {
        let mu = e.exp();
        if !e.is_finite() || e > MAX_LOG_MEAN || !mu.is_finite() {
            return Err(Error::Scenario(format!("non-finite or overflowing mean at linear predictor {e}")));
        }
        Ok(mu)
    };
    eta.iter()
        .map(|&e| match family {
            SimFamily::Gaussian => {
                if !e.is_finite() {
                    return Err(Error::Scenario("non-finite mean".into()));
                }
                Ok(e + std_normal(&mut rng))
            }
            SimFamily::Binomial => Ok(if rng.random::<f64>() < expit(e) { 1.0 } else { 0.0 }),
            SimFamily::Poisson => {
                let mu = check(e)?;
                draw_poisson(mu, &mut rng)
            }
            SimFamily::NegativeBinomial => {
                let mu = check(e)?;
                let lambda = Gamma::new(dispersion, mu / dispersion)
                    .map_err(|err| Error::Scenario(err.to_string()))?
                    .sample(&mut rng);
                draw_poisson(lambda, &mut rng)
            }
        })
        .collect()
}

fn draw_poisson(mu: f64, rng: &mut impl Rng) -> Result<f64> {
    if mu <= 0.0 {
        return Ok(0.0);
    }
    let d = Poisson::new(mu).map_err(|e| Error::Scenario(format!("Poisson mean {mu}: {e}")))?;
    Ok(d.sample(rng))
}

/// Area under the ROC curve of `score` against binary `y` (ties count half).
pub fn auc(score: &[f64], y: &[f64]) -> f64 {
    let mut idx: Vec<usize> = (0..score.len()).collect();
    idx.sort_by(|&a, &b| score[a].total_cmp(&score[b]));
    let mut ranks = vec![0.0; score.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && score[idx[j + 1]] == score[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[idx[k]] = r;
        }
        i = j + 1;
    }
    let n1 = y.iter().filter(|&&v| v == 1.0).count() as f64;
    let n0 = y.len() as f64 - n1;
    if n1 == 0.0 || n0 == 0.0 {
        return f64::NAN;
    }
    let rank_sum: f64 = ranks.iter().zip(y).filter(|(_, &v)| v == 1.0).map(|(r, _)| r).sum();
    (rank_sum - n1 * (n1 + 1.0) / 2.0) / (n1 * n0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cov(x: &DMatrix<f64>, a: usize, b: usize) -> f64 {
        let n = x.nrows() as f64;
        x.column(a).dot(&x.column(b)) / (n - 1.0)
    }

    #[test]
    fn identity_design_moments() {
        let x = gen_design(5000, 10, Correlation::Identity, Stream::new(1)).unwrap();
        for a in 0..10 {
            assert!(x.column(a).sum().abs() < 1e-9);
            for b in 0..10 {
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((cov(&x, a, b) - want).abs() < 0.1);
            }
        }
    }

    #[test]
    fn ar1_and_cs_moments() {
        let x = gen_design(20000, 4, Correlation::Ar1 { rho: 0.5 }, Stream::new(2)).unwrap();
        assert!((cov(&x, 0, 2) - 0.25).abs() < 0.03);
        assert!((cov(&x, 1, 2) - 0.5).abs() < 0.03);
        let x = gen_design(20000, 4, Correlation::Cs { rho: 0.5 }, Stream::new(3)).unwrap();
        assert!((cov(&x, 0, 3) - 0.5).abs() < 0.03);
        let x = gen_design(20000, 4, Correlation::Cs { rho: -0.2 }, Stream::new(4)).unwrap();
        assert!((cov(&x, 1, 2) + 0.2).abs() < 0.03);
        assert!(gen_design(10, 4, Correlation::Cs { rho: -0.34 }, Stream::new(4)).is_err());
    }

    #[test]
    fn fixed_truth_is_exact() {
        let spec = TruthSpec::Fixed {
            indices: vec![218, 242, 269, 417],
            values: vec![-2.0, -1.0, 1.0, 2.0],
            intercept: 0.0,
        };
        let (b, s) = gen_truth(500, &spec, Stream::new(0)).unwrap();
        assert_eq!(s, vec![217, 241, 268, 416]);
        assert_eq!((b[218], b[242], b[269], b[417]), (-2.0, -1.0, 1.0, 2.0));
        assert_eq!(b.iter().filter(|v| **v != 0.0).count(), 4);
    }

    #[test]
    fn random_truth_magnitudes() {
        let spec = TruthSpec::Random {
            s0: 10,
            low: 0.5,
            high: 1.5,
            intercept: 0.0,
        };
        let (b, s) = gen_truth(1000, &spec, Stream::new(5)).unwrap();
        assert_eq!(s.len(), 10);
        for &j in &s {
            assert!((0.5..=1.5).contains(&b[j + 1].abs()));
        }
        let (z, zs) = gen_truth(30, &TruthSpec::Zero { intercept: 0.0 }, Stream::new(0)).unwrap();
        assert!(zs.is_empty() && z.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn non_sparse_truth() {
        let spec = TruthSpec::NonSparse {
            small: 96,
            bound: 0.5,
            big: vec![-1.5, -1.0, 1.0, 1.5],
            intercept: 0.0,
        };
        let (b, s) = gen_truth(500, &spec, Stream::new(6)).unwrap();
        assert_eq!(s.len(), 100);
        assert_eq!(b.iter().filter(|v| v.abs() > 0.5).count(), 4);
    }

    #[test]
    fn response_moments() {
        let x = DMatrix::zeros(10000, 2);
        let y = gen_response(&x, &[1.0, 0.0, 0.0], SimFamily::Poisson, 10.0, Stream::new(7)).unwrap();
        let m = y.iter().sum::<f64>() / 1e4;
        assert!((m / std::f64::consts::E - 1.0).abs() < 0.03);

        let mu = 5.0f64;
        let y = gen_response(&x, &[mu.ln(), 0.0, 0.0], SimFamily::NegativeBinomial, 10.0, Stream::new(8)).unwrap();
        let m = y.iter().sum::<f64>() / 1e4;
        let v = y.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (1e4 - 1.0);
        assert!((m / mu - 1.0).abs() < 0.05);
        assert!(((v / m) / (1.0 + mu / 10.0) - 1.0).abs() < 0.1);

        let y = gen_response(&x, &[0.0, 0.0, 0.0], SimFamily::Binomial, 10.0, Stream::new(9)).unwrap();
        let m = y.iter().sum::<f64>() / 1e4;
        assert!((m - 0.5).abs() < 0.02);
    }

    #[test]
    fn overflowing_mean_is_an_error() {
        let x = DMatrix::from_element(3, 1, 1.0);
        assert!(gen_response(&x, &[0.0, 100.0], SimFamily::Poisson, 10.0, Stream::new(0)).is_err());
    }

    #[test]
    fn auc_extremes() {
        assert_eq!(auc(&[0.1, 0.2, 0.3, 0.4], &[0.0, 0.0, 1.0, 1.0]), 1.0);
        assert_eq!(auc(&[0.4, 0.3, 0.2, 0.1], &[0.0, 0.0, 1.0, 1.0]), 0.0);
        assert_eq!(auc(&[1.0; 4], &[0.0, 1.0, 0.0, 1.0]), 0.5);
    }
}
