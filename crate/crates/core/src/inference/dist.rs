//! Normal and chi-square tail probabilities.

use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_ur;

/// `2 (1 - Phi(|z|))`.
pub fn normal_two_sided_p(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0)
}

/// `Phi^{-1}(prob)` for `prob` in `(0, 1)`.
pub fn normal_quantile(prob: f64) -> f64 {
    Normal::standard().inverse_cdf(prob)
}

/// Upper tail `P(chi2_df > t)`.
pub fn chi2_upper(t: f64, df: usize) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t <= 0.0 {
        return 1.0;
    }
    if t.is_infinite() {
        return 0.0;
    }
    gamma_ur(df as f64 / 2.0, t / 2.0).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_at_975() {
        assert!((normal_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-9);
    }

    #[test]
    fn chi2_one_df_is_squared_normal() {
        for z in [0.01, 0.3, 1.0, 1.96, 2.5, 4.0, 7.0] {
            let a = chi2_upper(z * z, 1);
            let b = normal_two_sided_p(z);
            assert!((a - b).abs() < 1e-10, "z={z}: {a} vs {b}");
        }
    }

    #[test]
    fn chi2_two_df_is_exponential() {
        for t in [0.1, 1.0, 5.0, 20.0] {
            let want: f64 = (-t / 2.0_f64).exp();
            assert!(((chi2_upper(t, 2) - want) / want).abs() < 1e-12);
        }
    }

    #[test]
    fn edges() {
        assert_eq!(chi2_upper(0.0, 3), 1.0);
        assert_eq!(normal_two_sided_p(0.0), 1.0);
        assert_eq!(chi2_upper(f64::INFINITY, 3), 0.0);
    }
}
