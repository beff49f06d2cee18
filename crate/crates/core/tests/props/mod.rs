//! Property checks shared by the `properties` test and the acceptance run.

use nalgebra::DMatrix;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use ssglm::glm::score_and_information;
use ssglm::inference::{
    bias_corrected_variance, contrast_test, dist::normal_two_sided_p, infer, jackknife_variance, variance_estimate,
};
use ssglm::linalg::columns;
use ssglm::rng::Stream;
use ssglm::selection::{default_lambda_grid, lambda_max, lasso_path, LassoOptions, Sis};
use ssglm::smooth::{ssglm_fit, SsglmOptions};
use ssglm::split::make_splits;
use ssglm::{fit_mle, Dataset, Family, FitOptions};

pub type Outcome = Result<(), String>;

fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn check<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Outcome {
    runner(cases).run(&strategy, test).map_err(|e| e.to_string())
}

fn design(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = Stream::new(seed).rng();
    let mut x = DMatrix::from_fn(n, p, |_, _| {
        let v: f64 = StandardNormal.sample(&mut rng);
        v
    });
    for mut c in x.column_iter_mut() {
        let m = c.mean();
        c.add_scalar_mut(-m);
    }
    x
}

fn response(x: &DMatrix<f64>, family: Family, seed: u64, signal: f64) -> Vec<f64> {
    let mut rng = Stream::new(seed).named("y").rng();
    (0..x.nrows())
        .map(|i| {
            let eta = signal * (x[(i, 0)] - 0.5 * x[(i, x.ncols() - 1)]);
            match family {
                Family::Gaussian => {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    eta + e
                }
                Family::BinomialLogit => (rng.random::<f64>() < 1.0 / (1.0 + (-eta).exp())) as u8 as f64,
                Family::Poisson => rand_distr::Poisson::new(eta.exp()).unwrap().sample(&mut rng),
            }
        })
        .collect()
}

fn family_of(k: u8) -> Family {
    [Family::Gaussian, Family::BinomialLogit, Family::Poisson][k as usize % 3]
}

fn small_dataset(family: Family, seed: u64) -> Dataset {
    let x = design(80, 12, seed);
    let y = response(&x, family, seed, 0.7);
    Dataset::from_design(y, x).unwrap()
}

pub fn converged_fits_are_stationary(cases: u32) -> Outcome {
    check(cases, (0u64..10_000, 0u8..3, 40usize..90, 1usize..5), |(seed, fam, n, k)| {
        let family = family_of(fam);
        let x = design(n, k, seed);
        let y = response(&x, family, seed, 0.6);
        let subset: Vec<usize> = (0..k).collect();
        let opts = FitOptions::default();
        let fit = fit_mle(&y, &x, &subset, family, &opts).unwrap();
        prop_assume!(fit.converged && !fit.stabilized);
        let (score, _) = score_and_information(&fit.beta, &y, &columns(&x, &subset), family).unwrap();
        let worst = score.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(worst <= 10.0 * opts.score_tol, "score {worst}");
        Ok(())
    })
}

pub fn lasso_path_satisfies_kkt(cases: u32) -> Outcome {
    check(cases, (0u64..10_000, 0u8..3), |(seed, fam)| {
        let family = family_of(fam);
        let (n, p) = (60, 15);
        let x = design(n, p, seed);
        let y = response(&x, family, seed, 0.8);
        let lmax = lambda_max(&y, &x, family);
        prop_assume!(lmax > 0.0);
        let grid = default_lambda_grid(lmax, 15, 0.05);
        for pt in lasso_path(&y, &x, family, &grid, &LassoOptions::default()).unwrap() {
            prop_assume!(pt.converged);
            let mu: Vec<f64> = (0..n)
                .map(|i| {
                    let eta = pt.intercept + (0..p).map(|j| pt.coefficients[j] * x[(i, j)]).sum::<f64>();
                    family.mean(eta)
                })
                .collect();
            let tol = 1e-3 * pt.lambda + 1e-9;
            let g0: f64 = (0..n).map(|i| mu[i] - y[i]).sum::<f64>() / n as f64;
            prop_assert!(g0.abs() <= tol, "intercept gradient {g0}");
            for j in 0..p {
                let g: f64 = (0..n).map(|i| x[(i, j)] * (mu[i] - y[i])).sum::<f64>() / n as f64;
                let b = pt.coefficients[j];
                if b == 0.0 {
                    prop_assert!(g.abs() <= pt.lambda + tol, "inactive {j}: |{g}| > {}", pt.lambda);
                } else {
                    prop_assert!((g + pt.lambda * b.signum()).abs() <= tol, "active {j}: {g} vs {}", pt.lambda);
                }
            }
        }
        Ok(())
    })
}

pub fn corrected_variance_is_below_jackknife_and_clamped_nonnegative(cases: u32) -> Outcome {
    check(
        cases,
        (0u64..10_000, 6usize..30, 2usize..25, 0.2f64..0.8, 1usize..4),
        |(seed, n, b, q, k)| {
            let plan = match make_splits(n, q, b, seed) {
                Ok(p) => p,
                Err(_) => return Ok(()),
            };
            let mut rng = Stream::new(seed).named("values").rng();
            let values: Vec<Vec<f64>> =
                (0..b).map(|_| (0..k).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect()).collect();
            let v = variance_estimate(&plan, &values, k).unwrap();
            let raw = jackknife_variance(&plan, &values, k).unwrap();
            let (vb, _) = bias_corrected_variance(&plan, &values, k, &raw).unwrap();
            for j in 0..k {
                prop_assert!(v.v_hat[j] >= 0.0);
                prop_assert!(v.v_hat_b[j] >= 0.0);
                prop_assert!(v.v_hat_b[j] <= v.v_hat[j]);
                prop_assert!(vb[j] <= raw[j]);
                prop_assert_eq!(vb[j], v.v_hat_b[j]);
                if v.clamped[j] {
                    prop_assert_eq!(vb[j], 1e-12 * raw[j]);
                }
            }
            Ok(())
        },
    )
}

pub fn single_row_contrast_is_squared_z(cases: u32) -> Outcome {
    let strategy = (
        (-3.0f64..3.0, -3.0f64..3.0, -1.0f64..1.0),
        (0.05f64..2.0, 0.05f64..2.0, -0.9f64..0.9),
        (-2.0f64..2.0, -2.0f64..2.0),
    );
    check(cases, strategy, |((b1, b2, r), (a, c, rho), (w1, w2))| {
        prop_assume!(w1.abs() + w2.abs() > 0.1);
        let off = rho * (a * c).sqrt();
        let s = DMatrix::from_row_slice(2, 2, &[a, off, off, c]);
        let q = DMatrix::from_row_slice(1, 2, &[w1, w2]);
        let t = contrast_test(&[0, 1], &[b1, b2], &s, &q, &[r]).unwrap();
        let var = w1 * w1 * a + 2.0 * w1 * w2 * off + w2 * w2 * c;
        let z = (w1 * b1 + w2 * b2 - r) / var.sqrt();
        prop_assert!((t.statistic - z * z).abs() <= 1e-10 * (1.0 + z * z));
        prop_assert!((t.p_value - normal_two_sided_p(z)).abs() <= 1e-10);
        Ok(())
    })
}

pub fn smoothed_estimate_is_the_split_average(cases: u32) -> Outcome {
    check(cases, (0u64..1000, 0u8..3), |(seed, fam)| {
        let family = family_of(fam);
        let data = small_dataset(family, seed);
        let opts = SsglmOptions {
            b: 16,
            seed,
            threads: Some(1),
            ..SsglmOptions::default()
        };
        let fit = ssglm_fit(&data, family, &Sis { cap: Some(4) }, &opts).unwrap();
        for j in 0..=data.p() {
            let vals: Vec<f64> = fit.splits.iter().map(|s| s.beta_tilde[j]).filter(|v| v.is_finite()).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            prop_assert!((fit.beta_hat[j] - mean).abs() <= 1e-12 * (1.0 + mean.abs()));
            prop_assert_eq!(fit.effective_b[j], vals.len());
        }
        Ok(())
    })
}

pub fn serial_and_parallel_fits_are_bitwise_equal(cases: u32) -> Outcome {
    check(cases, (0u64..1000, 0u8..3), |(seed, fam)| {
        let family = family_of(fam);
        let data = small_dataset(family, seed);
        let run = |threads| {
            let opts = SsglmOptions {
                b: 12,
                seed,
                threads: Some(threads),
                ..SsglmOptions::default()
            };
            let fit = ssglm_fit(&data, family, &Sis { cap: Some(4) }, &opts).unwrap();
            let (v, r) = infer(&fit, 0.05).unwrap();
            (fit, v, r)
        };
        let a = run(1);
        let b = run(4);
        prop_assert_eq!(&a.0.beta_hat, &b.0.beta_hat);
        prop_assert_eq!(&a.0.splits, &b.0.splits);
        prop_assert_eq!(&a.1, &b.1);
        prop_assert_eq!(&a.2, &b.2);
        Ok(())
    })
}

pub fn gaussian_fits_are_scale_equivariant(cases: u32) -> Outcome {
    check(cases, (0u64..1000, prop_oneof![0.01f64..0.5, 2.0f64..50.0]), |(seed, c)| {
        let data = small_dataset(Family::Gaussian, seed);
        let scaled = Dataset::from_design(data.y.iter().map(|v| v * c).collect(), data.x.clone()).unwrap();
        let opts = SsglmOptions {
            b: 20,
            seed,
            threads: Some(1),
            ..SsglmOptions::default()
        };
        let sel = Sis { cap: Some(4) };
        let (v1, r1) = infer(&ssglm_fit(&data, Family::Gaussian, &sel, &opts).unwrap(), 0.05).unwrap();
        let (v2, r2) = infer(&ssglm_fit(&scaled, Family::Gaussian, &sel, &opts).unwrap(), 0.05).unwrap();
        for j in 0..=data.p() {
            let b1 = r1.beta_hat[j];
            prop_assert!((r2.beta_hat[j] - c * b1).abs() <= 1e-10 * c * (1.0 + b1.abs()));
            prop_assert!((r2.se[j] - c * r1.se[j]).abs() <= 1e-10 * c * r1.se[j]);
            prop_assert!((r2.p_values[j] - r1.p_values[j]).abs() <= 1e-10);
            prop_assert_eq!(v1.clamped[j], v2.clamped[j]);
        }
        Ok(())
    })
}

/// Every suite with its default case count.
pub const SUITES: &[(&str, fn(u32) -> Outcome, u32)] = &[
    ("stationarity", converged_fits_are_stationary, 48),
    ("kkt", lasso_path_satisfies_kkt, 48),
    ("variance ordering", corrected_variance_is_below_jackknife_and_clamped_nonnegative, 48),
    ("wald reduction", single_row_contrast_is_squared_z, 48),
    ("averaging identity", smoothed_estimate_is_the_split_average, 16),
    ("determinism", serial_and_parallel_fits_are_bitwise_equal, 16),
    ("scale equivariance", gaussian_fits_are_scale_equivariant, 16),
];
