//! Split-based variance estimates built from the covariance between split
//! membership and the per-split estimates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::split::SplitPlan;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceEstimate {
    pub v_hat: Vec<f64>,
    pub v_hat_b: Vec<f64>,
    /// Coordinates whose corrected value was non-positive and got floored.
    pub clamped: Vec<bool>,
    /// Splits that contributed to each coordinate.
    pub effective_b: Vec<usize>,
}

/// `n (n - 1) / (n - n1)^2`.
pub fn finite_sample_factor(plan: &SplitPlan) -> f64 {
    let n = plan.n as f64;
    let n2 = (plan.n - plan.n1) as f64;
    n * (n - 1.0) / (n2 * n2)
}

/// Covariance components `cov_i = (1/B) sum_b (J_bi - Jbar_i)(v_b - vbar)`
/// for each of the `k` columns of `values` (one row per split). Splits with a
/// non-finite entry in a column are dropped for that column only.
///
/// Returns an `n`-vector per column, plus the column means and the number of
/// splits used.
pub fn covariance_components(
    plan: &SplitPlan,
    values: &[Vec<f64>],
    k: usize,
) -> Result<(Vec<Vec<f64>>, Vec<f64>, Vec<usize>)> {
    let b_total = values.len();
    if b_total != plan.n_splits() {
        return Err(Error::Dimension(format!(
            "{b_total} split estimates for {} splits",
            plan.n_splits()
        )));
    }
    if let Some(row) = values.iter().find(|r| r.len() != k) {
        return Err(Error::Dimension(format!("split estimate of length {}, expected {k}", row.len())));
    }
    let n = plan.n;
    let all_valid: Vec<bool> = (0..k).map(|j| values.iter().all(|r| r[j].is_finite())).collect();
    let shared_jbar = jbar(plan, &(0..b_total).collect::<Vec<_>>());

    let mut comps = Vec::with_capacity(k);
    let mut means = Vec::with_capacity(k);
    let mut counts = Vec::with_capacity(k);
    for j in 0..k {
        let used: Vec<usize> = if all_valid[j] {
            (0..b_total).collect()
        } else {
            (0..b_total).filter(|&b| values[b][j].is_finite()).collect()
        };
        counts.push(used.len());
        if used.is_empty() {
            comps.push(vec![f64::NAN; n]);
            means.push(f64::NAN);
            continue;
        }
        let bj = used.len() as f64;
        let mean = used.iter().map(|&b| values[b][j]).sum::<f64>() / bj;
        let local;
        let jb = if all_valid[j] {
            &shared_jbar
        } else {
            local = jbar(plan, &used);
            &local
        };
        let mut cov = vec![0.0; n];
        for &b in &used {
            let dev = values[b][j] - mean;
            let mut in_d1 = plan.d1[b].iter().peekable();
            for (i, c) in cov.iter_mut().enumerate() {
                let member = if in_d1.peek() == Some(&&i) {
                    in_d1.next();
                    1.0
                } else {
                    0.0
                };
                *c += (member - jb[i]) * dev;
            }
        }
        for c in &mut cov {
            *c /= bj;
        }
        comps.push(cov);
        means.push(mean);
    }
    Ok((comps, means, counts))
}

fn jbar(plan: &SplitPlan, used: &[usize]) -> Vec<f64> {
    let mut jb = vec![0.0; plan.n];
    for &b in used {
        for &i in &plan.d1[b] {
            jb[i] += 1.0;
        }
    }
    let m = used.len().max(1) as f64;
    jb.iter_mut().for_each(|v| *v /= m);
    jb
}

/// Uncorrected variance `V_j = n(n-1)/(n-n1)^2 sum_i cov_ij^2` per column.
pub fn jackknife_variance(plan: &SplitPlan, values: &[Vec<f64>], k: usize) -> Result<Vec<f64>> {
    if values.len() < 2 {
        return Err(Error::TooFewSplits {
            needed: 2,
            got: values.len(),
        });
    }
    let (comps, _, counts) = covariance_components(plan, values, k)?;
    let f = finite_sample_factor(plan);
    Ok(comps
        .iter()
        .zip(&counts)
        .map(|(c, &m)| if m >= 2 { f * dot(c, c) } else { f64::NAN })
        .collect())
}

/// Bias-corrected variance
/// `V_j - (n / B_j^2) (n1 / (n - n1)) sum_b (v_bj - vbar_j)^2`, floored at
/// `1e-12 V_j` when the difference is not positive.
pub fn bias_corrected_variance(
    plan: &SplitPlan,
    values: &[Vec<f64>],
    k: usize,
    v_hat: &[f64],
) -> Result<(Vec<f64>, Vec<bool>)> {
    if values.len() < 2 {
        return Err(Error::TooFewSplits {
            needed: 2,
            got: values.len(),
        });
    }
    let n = plan.n as f64;
    let ratio = plan.n1 as f64 / (plan.n - plan.n1) as f64;
    let mut out = Vec::with_capacity(k);
    let mut clamped = Vec::with_capacity(k);
    for j in 0..k {
        let col: Vec<f64> = values.iter().map(|r| r[j]).filter(|v| v.is_finite()).collect();
        if col.len() < 2 || !v_hat[j].is_finite() {
            out.push(f64::NAN);
            clamped.push(false);
            continue;
        }
        let bj = col.len() as f64;
        let mean = col.iter().sum::<f64>() / bj;
        let ss: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
        let corrected = v_hat[j] - n / (bj * bj) * ratio * ss;
        if corrected > 0.0 {
            out.push(corrected);
            clamped.push(false);
        } else {
            out.push(1e-12 * v_hat[j]);
            clamped.push(ss > 0.0);
        }
    }
    Ok((out, clamped))
}

/// Both estimates for a `B x k` matrix of split estimates.
pub fn variance_estimate(plan: &SplitPlan, values: &[Vec<f64>], k: usize) -> Result<VarianceEstimate> {
    if values.len() < 2 {
        return Err(Error::TooFewSplits {
            needed: 2,
            got: values.len(),
        });
    }
    let (comps, _, counts) = covariance_components(plan, values, k)?;
    let f = finite_sample_factor(plan);
    let v_hat: Vec<f64> = comps
        .iter()
        .zip(&counts)
        .map(|(c, &m)| if m >= 2 { f * dot(c, c) } else { f64::NAN })
        .collect();
    let (v_hat_b, clamped) = bias_corrected_variance(plan, values, k, &v_hat)?;
    Ok(VarianceEstimate {
        v_hat,
        v_hat_b,
        clamped,
        effective_b: counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_plan() -> SplitPlan {
        SplitPlan {
            n: 4,
            n1: 2,
            q: 0.5,
            seed: 0,
            d1: vec![vec![0, 1], vec![2, 3]],
        }
    }

    #[test]
    fn four_sample_hand_example() {
        let plan = toy_plan();
        let vals = vec![vec![1.0], vec![3.0]];
        let (c, m, _) = covariance_components(&plan, &vals, 1).unwrap();
        assert_eq!(m, vec![2.0]);
        assert_eq!(c[0], vec![-0.5, -0.5, 0.5, 0.5]);
        let v = jackknife_variance(&plan, &vals, 1).unwrap();
        assert!((v[0] - 3.0).abs() < 1e-14);
        let (vb, cl) = bias_corrected_variance(&plan, &vals, 1, &v).unwrap();
        assert!((vb[0] - 1.0).abs() < 1e-14);
        assert!(!cl[0]);
    }

    #[test]
    fn constant_estimates_have_zero_variance() {
        let plan = toy_plan();
        let vals = vec![vec![0.7, -1.0], vec![0.7, -1.0]];
        let est = variance_estimate(&plan, &vals, 2).unwrap();
        assert_eq!(est.v_hat, vec![0.0, 0.0]);
        assert_eq!(est.v_hat_b, vec![0.0, 0.0]);
        assert_eq!(est.clamped, vec![false, false]);
    }

    #[test]
    fn one_split_is_rejected() {
        let plan = SplitPlan {
            d1: vec![vec![0, 1]],
            ..toy_plan()
        };
        assert!(matches!(
            jackknife_variance(&plan, &[vec![1.0]], 1),
            Err(Error::TooFewSplits { .. })
        ));
    }

    #[test]
    fn failed_splits_are_dropped_per_coordinate() {
        let plan = SplitPlan {
            d1: vec![vec![0, 1], vec![2, 3], vec![0, 2]],
            ..toy_plan()
        };
        let vals = vec![vec![1.0, 5.0], vec![3.0, f64::NAN], vec![2.0, 4.0]];
        let est = variance_estimate(&plan, &vals, 2).unwrap();
        assert_eq!(est.effective_b, vec![3, 2]);
        let sub = plan.subset(&[0, 2]);
        let direct = variance_estimate(&sub, &[vec![5.0], vec![4.0]], 1).unwrap();
        assert_eq!(est.v_hat[1], direct.v_hat[0]);
        assert_eq!(est.v_hat_b[1], direct.v_hat_b[0]);
    }

    #[test]
    fn negative_correction_is_floored_and_flagged() {
        // identical membership in every split: no covariance, but spread
        let plan = SplitPlan {
            d1: vec![vec![0, 1], vec![0, 1]],
            ..toy_plan()
        };
        let est = variance_estimate(&plan, &[vec![0.0], vec![2.0]], 1).unwrap();
        assert_eq!(est.v_hat[0], 0.0);
        assert!(est.clamped[0]);
        assert!(est.v_hat_b[0] >= 0.0 && est.v_hat_b[0] <= est.v_hat[0]);
    }
}
