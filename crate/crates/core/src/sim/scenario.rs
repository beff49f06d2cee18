use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::Family;
use crate::selection::SelectorSpec;

/// Response-generating law. The negative binomial is only a generator; it is
/// fitted as Poisson.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimFamily {
    Gaussian,
    #[serde(alias = "logistic", alias = "binomial-logit")]
    Binomial,
    Poisson,
    NegativeBinomial,
}

impl SimFamily {
    pub fn fit_family(self) -> Family {
        match self {
            SimFamily::Gaussian => Family::Gaussian,
            SimFamily::Binomial => Family::BinomialLogit,
            SimFamily::Poisson | SimFamily::NegativeBinomial => Family::Poisson,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Correlation {
    #[default]
    Identity,
    /// `Sigma_ij = rho^|i - j|`.
    Ar1 { rho: f64 },
    /// `Sigma_ij = rho` off the diagonal.
    Cs { rho: f64 },
}

/// Indices in scenario files are 1-based predictor coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TruthSpec {
    Fixed {
        indices: Vec<usize>,
        values: Vec<f64>,
        #[serde(default)]
        intercept: f64,
    },
    /// `s0` uniformly placed signals with magnitude `Unif(low, high)` and a
    /// random sign.
    Random {
        s0: usize,
        #[serde(default = "default_low")]
        low: f64,
        #[serde(default = "default_high")]
        high: f64,
        #[serde(default)]
        intercept: f64,
    },
    /// `small` coefficients from `Unif[-bound, bound]` plus the `big` values,
    /// all at random coordinates.
    NonSparse {
        #[serde(default = "default_small")]
        small: usize,
        #[serde(default = "default_bound")]
        bound: f64,
        #[serde(default = "default_big")]
        big: Vec<f64>,
        #[serde(default)]
        intercept: f64,
    },
    Zero {
        #[serde(default)]
        intercept: f64,
    },
}

fn default_low() -> f64 {
    0.5
}
fn default_high() -> f64 {
    1.5
}
fn default_small() -> usize {
    96
}
fn default_bound() -> f64 {
    0.5
}
fn default_big() -> Vec<f64> {
    vec![-1.5, -1.0, 1.0, 1.5]
}

/// A linear hypothesis `Q beta1 = R` on the scenario's target subvector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContrastSpec {
    pub label: String,
    pub q: Vec<Vec<f64>>,
    pub r: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContrastStudy {
    /// 1-based coordinates of the target subvector.
    pub subset: Vec<usize>,
    pub contrasts: Vec<ContrastSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimScenario {
    pub name: String,
    pub family: SimFamily,
    /// Negative-binomial size parameter.
    #[serde(default = "default_dispersion")]
    pub dispersion: f64,
    pub n: usize,
    pub p: usize,
    pub truth: TruthSpec,
    #[serde(default)]
    pub correlation: Correlation,
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(rename = "B", alias = "b", default = "default_b")]
    pub b: usize,
    #[serde(rename = "K", alias = "replications", default = "default_k")]
    pub replications: usize,
    #[serde(default)]
    pub selector: SelectorSpec,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Draw a new truth for each replication instead of once per scenario.
    #[serde(default)]
    pub redraw_truth: bool,
    #[serde(default)]
    pub contrast: Option<ContrastStudy>,
}

fn default_dispersion() -> f64 {
    10.0
}
fn default_q() -> f64 {
    0.5
}
fn default_b() -> usize {
    100
}
fn default_k() -> usize {
    100
}
fn default_alpha() -> f64 {
    0.05
}
fn default_seed() -> u64 {
    1
}

impl SimScenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let s: SimScenario = toml::from_str(text).map_err(|e| Error::Scenario(e.message().to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Scenario(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Scenario(m));
        if self.p == 0 || self.n < 8 {
            return bad(format!("need p >= 1 and n >= 8, got n = {}, p = {}", self.n, self.p));
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return bad(format!("q = {} outside (0, 1)", self.q));
        }
        if self.b == 0 || self.replications == 0 {
            return bad("B and K must be positive".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha = {} outside (0, 1)", self.alpha));
        }
        if !(self.dispersion > 0.0 && self.dispersion.is_finite()) {
            return bad(format!("dispersion = {} must be positive", self.dispersion));
        }
        match self.correlation {
            Correlation::Identity => {}
            Correlation::Ar1 { rho } => {
                if !(rho > -1.0 && rho < 1.0) {
                    return bad(format!("AR(1) rho = {rho} outside (-1, 1)"));
                }
            }
            Correlation::Cs { rho } => {
                let lower = if self.p > 1 { -1.0 / (self.p as f64 - 1.0) } else { -1.0 };
                if !(rho > lower && rho < 1.0) {
                    return bad(format!(
                        "compound-symmetry rho = {rho} is not positive definite for p = {}",
                        self.p
                    ));
                }
            }
        }
        let in_range = |ix: &[usize]| ix.iter().all(|&j| j >= 1 && j <= self.p);
        match &self.truth {
            TruthSpec::Fixed { indices, values, .. } => {
                if indices.len() != values.len() {
                    return bad(format!("{} indices for {} values", indices.len(), values.len()));
                }
                if !in_range(indices) {
                    return bad(format!("truth index outside 1..={}", self.p));
                }
                let mut sorted = indices.clone();
                sorted.sort_unstable();
                sorted.dedup();
                if sorted.len() != indices.len() {
                    return bad("duplicate truth index".into());
                }
            }
            TruthSpec::Random { s0, low, high, .. } => {
                if *s0 > self.p {
                    return bad(format!("s0 = {s0} exceeds p = {}", self.p));
                }
                if !(0.0 <= *low && low <= high) {
                    return bad(format!("bad magnitude range [{low}, {high}]"));
                }
            }
            TruthSpec::NonSparse { small, big, bound, .. } => {
                if small + big.len() > self.p {
                    return bad(format!("{} signals exceed p = {}", small + big.len(), self.p));
                }
                if !(*bound >= 0.0) {
                    return bad("negative bound".into());
                }
            }
            TruthSpec::Zero { .. } => {}
        }
        if let Some(c) = &self.contrast {
            if c.subset.is_empty() || !in_range(&c.subset) {
                return bad("contrast subset empty or out of range".into());
            }
            for spec in &c.contrasts {
                if spec.q.is_empty() || spec.q.len() != spec.r.len() {
                    return bad(format!("contrast `{}`: Q rows and R length differ", spec.label));
                }
                if spec.q.iter().any(|row| row.len() != c.subset.len()) {
                    return bad(format!("contrast `{}`: Q rows must have {} entries", spec.label, c.subset.len()));
                }
            }
        }
        Ok(())
    }
}
