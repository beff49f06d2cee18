//! Canonical-link exponential families.
//!
//! The log-density of a response `y` with natural parameter `theta` is
//! `y * theta - A(theta) + c(y)`. Only `A` and its first two derivatives
//! enter the fitting code; `c(y)` is dropped from every likelihood.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest natural parameter accepted by the Poisson cumulant, `ln(f64::MAX) / 2`.
pub const POISSON_THETA_MAX: f64 = 354.891_356_446_692_4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Gaussian,
    #[serde(alias = "binomial", alias = "logistic")]
    BinomialLogit,
    Poisson,
}

/// `(A(theta), A'(theta), A''(theta))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cumulant {
    pub a: f64,
    pub mean: f64,
    pub variance: f64,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::BinomialLogit => "binomial",
            Family::Poisson => "poisson",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" | "linear" => Ok(Family::Gaussian),
            "binomial" | "binomial_logit" | "logistic" | "logit" => Ok(Family::BinomialLogit),
            "poisson" => Ok(Family::Poisson),
            other => Err(Error::InvalidArgument(format!("unknown family `{other}`"))),
        }
    }

    /// Checked evaluation of the cumulant and its derivatives.
    pub fn eval(self, theta: f64) -> Result<Cumulant> {
        if !theta.is_finite() {
            return Err(Error::InvalidArgument(format!("theta must be finite, got {theta}")));
        }
        if self == Family::Poisson && theta > POISSON_THETA_MAX {
            return Err(Error::NonFiniteCumulant {
                family: self.name(),
                theta,
            });
        }
        Ok(Cumulant {
            a: self.cumulant(theta),
            mean: self.mean(theta),
            variance: self.variance(theta),
        })
    }

    /// `A(theta)`. Poisson arguments are clamped at [`POISSON_THETA_MAX`].
    #[inline]
    pub fn cumulant(self, theta: f64) -> f64 {
        match self {
            Family::Gaussian => 0.5 * theta * theta,
            Family::BinomialLogit => softplus(theta),
            Family::Poisson => theta.min(POISSON_THETA_MAX).exp(),
        }
    }

    #[inline]
    pub fn mean(self, theta: f64) -> f64 {
        match self {
            Family::Gaussian => theta,
            Family::BinomialLogit => expit(theta),
            Family::Poisson => theta.min(POISSON_THETA_MAX).exp(),
        }
    }

    /// `A''(theta)`, floored at the smallest positive normal double.
    #[inline]
    pub fn variance(self, theta: f64) -> f64 {
        match self {
            Family::Gaussian => 1.0,
            Family::BinomialLogit => {
                let e = (-theta.abs()).exp();
                let v = e / ((1.0 + e) * (1.0 + e));
                v.max(f64::MIN_POSITIVE)
            }
            Family::Poisson => theta.min(POISSON_THETA_MAX).exp().max(f64::MIN_POSITIVE),
        }
    }

    /// Canonical link `g(mu)`; `mu` is clamped into the link's domain first.
    pub fn link(self, mu: f64) -> f64 {
        const EPS: f64 = 1e-10;
        match self {
            Family::Gaussian => mu,
            Family::BinomialLogit => {
                let m = mu.clamp(EPS, 1.0 - EPS);
                (m / (1.0 - m)).ln()
            }
            Family::Poisson => mu.max(EPS).ln(),
        }
    }

    /// Whether `y` is in the support of the family.
    pub fn admits(self, y: f64) -> bool {
        match self {
            Family::Gaussian => y.is_finite(),
            Family::BinomialLogit => y == 0.0 || y == 1.0,
            Family::Poisson => y.is_finite() && y >= 0.0 && y.fract() == 0.0,
        }
    }

    pub fn check_response(self, y: &[f64]) -> Result<()> {
        match y.iter().position(|&v| !self.admits(v)) {
            None => Ok(()),
            Some(i) => Err(Error::InvalidResponse(format!(
                "response value {} at row {} is not valid for the {} family",
                y[i],
                i + 1,
                self.name()
            ))),
        }
    }

    /// Unit deviance `2 * {log f(y; y) - log f(y; mu)}`.
    pub fn unit_deviance(self, y: f64, mu: f64) -> f64 {
        match self {
            Family::Gaussian => (y - mu) * (y - mu),
            Family::BinomialLogit => {
                let mu = mu.clamp(1e-15, 1.0 - 1e-15);
                if y > 0.5 {
                    -2.0 * mu.ln()
                } else {
                    -2.0 * (1.0 - mu).ln()
                }
            }
            Family::Poisson => {
                let mu = mu.max(1e-300);
                if y > 0.0 {
                    2.0 * (y * (y / mu).ln() - (y - mu))
                } else {
                    2.0 * mu
                }
            }
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Family::parse(s)
    }
}

#[inline]
pub(crate) fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
pub(crate) fn expit(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
