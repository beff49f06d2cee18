use serde::{Deserialize, Serialize};

use super::dist::{normal_quantile, normal_two_sided_p};
use super::variance::{variance_estimate, VarianceEstimate};
use crate::error::{Error, Result};
use crate::smooth::SmoothedFit;

/// Per-coordinate estimates, Wald intervals and p-values. Index 0 is the
/// intercept, index `j + 1` is column `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceReport {
    pub alpha: f64,
    pub beta_hat: Vec<f64>,
    pub se: Vec<f64>,
    pub ci_lower: Vec<f64>,
    pub ci_upper: Vec<f64>,
    pub p_values: Vec<f64>,
    /// `min(1, p * p_value)` with `p` the number of predictors.
    pub bonferroni: Vec<f64>,
    /// Selection frequency per slot; the intercept is always in the model.
    pub selection_freq: Vec<f64>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

/// Wald inference from point estimates and (corrected) variances.
pub fn coordinate_inference(beta_hat: &[f64], var: &[f64], alpha: f64) -> Result<InferenceReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if beta_hat.len() != var.len() {
        return Err(Error::Dimension(format!(
            "{} estimates for {} variances",
            beta_hat.len(),
            var.len()
        )));
    }
    let z = normal_quantile(1.0 - alpha / 2.0);
    let m = beta_hat.len().saturating_sub(1).max(1) as f64;
    let k = beta_hat.len();
    let mut r = InferenceReport {
        alpha,
        beta_hat: beta_hat.to_vec(),
        se: Vec::with_capacity(k),
        ci_lower: Vec::with_capacity(k),
        ci_upper: Vec::with_capacity(k),
        p_values: Vec::with_capacity(k),
        bonferroni: Vec::with_capacity(k),
        selection_freq: vec![1.0; k],
        warnings: Vec::new(),
    };
    for (j, (&b, &v)) in beta_hat.iter().zip(var).enumerate() {
        let se = if v >= 0.0 { v.sqrt() } else { f64::NAN };
        let p = if !b.is_finite() || !se.is_finite() {
            r.warnings.push(format!("coordinate {j}: no usable estimate"));
            f64::NAN
        } else if se == 0.0 {
            if b == 0.0 {
                1.0
            } else {
                r.warnings.push(format!("coordinate {j}: degenerate zero variance"));
                0.0
            }
        } else {
            normal_two_sided_p(b / se)
        };
        r.se.push(se);
        r.ci_lower.push(b - z * se);
        r.ci_upper.push(b + z * se);
        r.p_values.push(p);
        r.bonferroni.push((m * p).min(1.0));
    }
    Ok(r)
}

/// Variance estimates and the inference report for a smoothed fit.
pub fn infer(fit: &SmoothedFit, alpha: f64) -> Result<(VarianceEstimate, InferenceReport)> {
    let values = fit.estimate_matrix();
    let var = variance_estimate(&fit.plan, &values, fit.beta_hat.len())?;
    let mut report = coordinate_inference(&fit.beta_hat, &var.v_hat_b, alpha)?;
    for (j, f) in fit.selection_freq.iter().enumerate() {
        report.selection_freq[j + 1] = *f;
    }
    for (j, &c) in var.clamped.iter().enumerate() {
        if c {
            report
                .warnings
                .push(format!("coordinate {j}: corrected variance was not positive and was floored"));
        }
    }
    Ok((var, report))
}
