use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generate::{auc, gen_design, gen_response, gen_truth, linear_predictor};
use super::scenario::{SimFamily, SimScenario};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::inference::{contrast_test, infer, subvector_covariance, subvector_fit};
use crate::rng::Stream;
use crate::smooth::{ssglm_fit, with_threads, SsglmOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordinateMetrics {
    /// 0 for the intercept, otherwise the 1-based predictor coordinate.
    pub index: usize,
    pub truth: f64,
    pub bias: f64,
    pub mean_se: f64,
    pub sd: f64,
    pub coverage: f64,
    pub sel_freq: f64,
    pub mse: f64,
    pub rejection_rate: f64,
    /// Number of replications with a usable estimate.
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSummary {
    pub count: usize,
    pub bias: f64,
    pub mean_se: f64,
    pub sd: f64,
    pub coverage: f64,
    pub sel_freq: f64,
    pub rejection_rate: f64,
    /// Monte-Carlo standard error of the averaged rejection rate, treating
    /// coordinates as independent.
    pub rejection_mc_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub scenario: String,
    pub alpha: f64,
    pub k_requested: usize,
    pub k_effective: usize,
    pub failures: Vec<(usize, String)>,
    /// Intercept-first truth of the first replication.
    pub truth: Vec<f64>,
    /// 1-based signal coordinates.
    pub signals: Vec<usize>,
    pub coordinates: Vec<CoordinateMetrics>,
    pub noise: NoiseSummary,
    /// `(1/p) sum_j MSE_j` over predictors.
    pub mse_avg: f64,
    /// Mean held-out AUC, binomial scenarios only.
    pub auc: Option<f64>,
    /// Per-replication wall time in seconds; excluded from comparisons.
    #[serde(default)]
    pub wall_seconds: Vec<f64>,
}

impl MetricsReport {
    pub fn without_timing(&self) -> MetricsReport {
        MetricsReport {
            wall_seconds: Vec::new(),
            ..self.clone()
        }
    }

    pub fn coordinate(&self, index: usize) -> &CoordinateMetrics {
        &self.coordinates[index]
    }

    /// Binomial Monte-Carlo standard error `sqrt(r (1 - r) / k)`.
    pub fn mc_se(rate: f64, k: usize) -> f64 {
        (rate * (1.0 - rate) / k.max(1) as f64).sqrt()
    }
}

pub(crate) struct Replicate {
    pub truth: Vec<f64>,
    pub support: Vec<usize>,
    pub data: Dataset,
}

/// Draw replication `k` of a scenario. The truth stream ignores `k` unless
/// the scenario redraws it.
pub(crate) fn replicate(s: &SimScenario, k: usize) -> Result<Replicate> {
    let root = Stream::new(s.seed);
    let rep = root.child(k as u64);
    let truth_stream = if s.redraw_truth {
        rep.named("truth")
    } else {
        root.named("truth")
    };
    let (truth, support) = gen_truth(s.p, &s.truth, truth_stream)?;
    let x = gen_design(s.n, s.p, s.correlation, rep.named("design"))?;
    let y = gen_response(&x, &truth, s.family, s.dispersion, rep.named("response"))?;
    let data = Dataset::from_design(y, x)?;
    Ok(Replicate { truth, support, data })
}

struct RepOutcome {
    truth: Vec<f64>,
    support: Vec<usize>,
    beta: Vec<f64>,
    se: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    p: Vec<f64>,
    sel: Vec<f64>,
    auc: Option<f64>,
    seconds: f64,
}

fn run_one(s: &SimScenario, k: usize) -> Result<RepOutcome> {
    let start = Instant::now();
    let rep = replicate(s, k)?;
    let family = s.family.fit_family();
    let opts = SsglmOptions {
        q: s.q,
        b: s.b,
        seed: Stream::new(s.seed).child(k as u64).named("fit").key(),
        threads: None,
        ..SsglmOptions::default()
    };
    let selector = s.selector.build();
    let fit = ssglm_fit(&rep.data, family, selector.as_ref(), &opts)?;
    let (_, report) = infer(&fit, s.alpha)?;
    let auc = if s.family == SimFamily::Binomial {
        let test_stream = Stream::new(s.seed).child(k as u64).named("holdout");
        let xt = gen_design(s.n, s.p, s.correlation, test_stream.named("design"))?;
        let yt = gen_response(&xt, &rep.truth, s.family, s.dispersion, test_stream.named("response"))?;
        let coef: Vec<f64> = report.beta_hat.iter().map(|b| if b.is_finite() { *b } else { 0.0 }).collect();
        Some(auc(&linear_predictor(&xt, &coef), &yt))
    } else {
        None
    };
    Ok(RepOutcome {
        truth: rep.truth,
        support: rep.support,
        beta: report.beta_hat,
        se: report.se,
        lower: report.ci_lower,
        upper: report.ci_upper,
        p: report.p_values,
        sel: fit.selection_freq,
        auc,
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, c) = v.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    if c == 0 {
        f64::NAN
    } else {
        s / c as f64
    }
}

/// Runs every replication, fitting the smoothed estimator and the Wald
/// inference on each, and aggregates the per-coordinate metrics.
pub fn run_scenario(s: &SimScenario, threads: Option<usize>) -> Result<MetricsReport> {
    s.validate()?;
    let outcomes = with_threads(threads, || {
        (0..s.replications)
            .into_par_iter()
            .map(|k| run_one(s, k))
            .collect::<Vec<_>>()
    })?;
    let mut ok = Vec::new();
    let mut failures = Vec::new();
    for (k, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(o) => ok.push(o),
            Err(e) => {
                log::warn!("replication {k} failed: {e}");
                failures.push((k, e.to_string()));
            }
        }
    }
    if ok.is_empty() {
        return Err(Error::Scenario(format!(
            "all {} replications failed; first error: {}",
            s.replications,
            failures.first().map(|f| f.1.as_str()).unwrap_or("")
        )));
    }
    let p = s.p;
    let mut coords = Vec::with_capacity(p + 1);
    for j in 0..=p {
        let usable: Vec<&RepOutcome> = ok.iter().filter(|o| o.beta[j].is_finite()).collect();
        let kj = usable.len();
        let kf = kj.max(1) as f64;
        let est_mean = mean(usable.iter().map(|o| o.beta[j]));
        let bias = mean(usable.iter().map(|o| o.beta[j] - o.truth[j]));
        let sd = if kj > 1 {
            (usable.iter().map(|o| (o.beta[j] - est_mean).powi(2)).sum::<f64>() / (kf - 1.0)).sqrt()
        } else {
            f64::NAN
        };
        let mse = mean(usable.iter().map(|o| (o.beta[j] - o.truth[j]).powi(2)));
        let covered = usable
            .iter()
            .filter(|o| o.lower[j] <= o.truth[j] && o.truth[j] <= o.upper[j])
            .count();
        let rejected = usable.iter().filter(|o| o.p[j] < s.alpha).count();
        coords.push(CoordinateMetrics {
            index: j,
            truth: ok[0].truth[j],
            bias,
            mean_se: mean(usable.iter().map(|o| o.se[j]).filter(|v| v.is_finite())),
            sd,
            coverage: covered as f64 / kf,
            sel_freq: if j == 0 { 1.0 } else { mean(ok.iter().map(|o| o.sel[j - 1])) },
            mse,
            rejection_rate: rejected as f64 / kf,
            k: kj,
        });
    }
    let first_support: Vec<usize> = ok[0].support.clone();
    let is_noise = |j: usize| ok.iter().all(|o| o.truth[j] == 0.0);
    let noise: Vec<&CoordinateMetrics> = coords[1..].iter().filter(|c| is_noise(c.index)).collect();
    let noise_reject = mean(noise.iter().map(|c| c.rejection_rate));
    let noise_trials: usize = noise.iter().map(|c| c.k).sum();
    let noise_summary = NoiseSummary {
        count: noise.len(),
        bias: mean(noise.iter().map(|c| c.bias)),
        mean_se: mean(noise.iter().map(|c| c.mean_se)),
        sd: mean(noise.iter().map(|c| c.sd)),
        coverage: mean(noise.iter().map(|c| c.coverage)),
        sel_freq: mean(noise.iter().map(|c| c.sel_freq)),
        rejection_rate: noise_reject,
        rejection_mc_se: MetricsReport::mc_se(noise_reject, noise_trials),
    };
    let mse_avg = mean(coords[1..].iter().map(|c| c.mse));
    let auc = if s.family == SimFamily::Binomial {
        Some(mean(ok.iter().filter_map(|o| o.auc).filter(|a| a.is_finite())))
    } else {
        None
    };
    Ok(MetricsReport {
        scenario: s.name.clone(),
        alpha: s.alpha,
        k_requested: s.replications,
        k_effective: ok.len(),
        failures,
        truth: ok[0].truth.clone(),
        signals: first_support.iter().map(|j| j + 1).collect(),
        coordinates: coords,
        noise: noise_summary,
        mse_avg,
        auc,
        wall_seconds: ok.iter().map(|o| o.seconds).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastRate {
    pub label: String,
    pub df: usize,
    /// `Q beta* - R` under the scenario truth; zero means the null holds.
    pub truth_gap: Vec<f64>,
    pub rejection_rate: f64,
    pub mc_se: f64,
    pub mean_statistic: f64,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastReport {
    pub scenario: String,
    /// 1-based target coordinates.
    pub subset: Vec<usize>,
    pub mean_beta1: Vec<f64>,
    pub mean_sigma_diag: Vec<f64>,
    pub rates: Vec<ContrastRate>,
    pub failures: Vec<(usize, String)>,
}

/// Rejection rates of the scenario's contrasts over its replications, each
/// using the subvector estimator and the Wald test.
pub fn contrast_scenario(s: &SimScenario, threads: Option<usize>) -> Result<ContrastReport> {
    s.validate()?;
    let study = s
        .contrast
        .as_ref()
        .ok_or_else(|| Error::Scenario(format!("scenario `{}` has no contrast section", s.name)))?;
    let subset: Vec<usize> = study.subset.iter().map(|j| j - 1).collect();
    let family = s.family.fit_family();
    let per_rep = with_threads(threads, || {
        (0..s.replications)
            .into_par_iter()
            .map(|k| -> Result<(Vec<f64>, Vec<f64>, Vec<(f64, f64)>, Vec<f64>)> {
                let rep = replicate(s, k)?;
                let opts = SsglmOptions {
                    q: s.q,
                    b: s.b,
                    seed: Stream::new(s.seed).child(k as u64).named("fit").key(),
                    threads: None,
                    ..SsglmOptions::default()
                };
                let selector = s.selector.build();
                let sub = subvector_fit(&rep.data, family, selector.as_ref(), &subset, &opts)?;
                let sigma = subvector_covariance(&sub.plan, &sub.split_estimates)?;
                let mut tests = Vec::new();
                for c in &study.contrasts {
                    let q = DMatrix::from_fn(c.q.len(), subset.len(), |r, col| c.q[r][col]);
                    let t = contrast_test(&subset, &sub.beta1_hat, &sigma, &q, &c.r)?;
                    tests.push((t.statistic, t.p_value));
                }
                let truth1 = subset.iter().map(|&j| rep.truth[j + 1]).collect();
                Ok((sub.beta1_hat, sigma.diagonal().iter().copied().collect(), tests, truth1))
            })
            .collect::<Vec<_>>()
    })?;
    let mut ok = Vec::new();
    let mut failures = Vec::new();
    for (k, r) in per_rep.into_iter().enumerate() {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => failures.push((k, e.to_string())),
        }
    }
    if ok.is_empty() {
        return Err(Error::Scenario(format!("all {} replications failed", s.replications)));
    }
    let m = subset.len();
    let kf = ok.len() as f64;
    let mean_beta1 = (0..m).map(|a| ok.iter().map(|o| o.0[a]).sum::<f64>() / kf).collect();
    let mean_sigma_diag = (0..m).map(|a| ok.iter().map(|o| o.1[a]).sum::<f64>() / kf).collect();
    let truth1 = &ok[0].3;
    let rates = study
        .contrasts
        .iter()
        .enumerate()
        .map(|(ci, c)| {
            let rejected = ok.iter().filter(|o| o.2[ci].1 < s.alpha).count();
            let rate = rejected as f64 / kf;
            ContrastRate {
                label: c.label.clone(),
                df: c.q.len(),
                truth_gap: c
                    .q
                    .iter()
                    .zip(&c.r)
                    .map(|(row, r)| row.iter().zip(truth1).map(|(a, b)| a * b).sum::<f64>() - r)
                    .collect(),
                rejection_rate: rate,
                mc_se: MetricsReport::mc_se(rate, ok.len()),
                mean_statistic: ok.iter().map(|o| o.2[ci].0).sum::<f64>() / kf,
                k: ok.len(),
            }
        })
        .collect();
    Ok(ContrastReport {
        scenario: s.name.clone(),
        subset: study.subset.clone(),
        mean_beta1,
        mean_sigma_diag,
        rates,
        failures,
    })
}

/// `MSE_avg` for each split proportion, with the same simulated datasets at
/// every `q`.
pub fn q_sweep(s: &SimScenario, qs: &[f64], threads: Option<usize>) -> Result<Vec<(f64, f64)>> {
    qs.iter()
        .map(|&q| {
            let scenario = SimScenario { q, ..s.clone() };
            run_scenario(&scenario, threads).map(|r| (q, r.mse_avg))
        })
        .collect()
}
