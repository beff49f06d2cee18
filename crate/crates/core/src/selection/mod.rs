//! Variable-selection schemes applied to the selection half of each split.
//!
//! Any type implementing [`Selector`] can drive the splitting procedure.
//! Provided: marginal screening ([`Sis`]), cross-validated LASSO
//! ([`CvLasso`]) and iterative screening with a BIC-tuned LASSO refit
//! ([`Isis`]). Sure screening can fail for signals below the detection
//! floor of the selector; such signals are still estimated, through the
//! `S + {j}` refits, but their coverage then depends on the remaining
//! selected set containing every other active predictor.

mod cv;
mod isis;
mod lasso;
mod sis;

pub use cv::{cv_select, CvLasso};
pub use isis::{isis_select, Isis};
pub use lasso::{default_lambda_grid, lambda_max, lasso_path, LassoOptions, PathPoint};
pub use sis::{sis_default_cap, sis_select, Sis};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::family::Family;
use crate::rng::Stream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// Selected column indices, unique and ascending.
    pub selected: Vec<usize>,
    /// Per-column ranking statistic (larger is stronger), when the selector has one.
    pub scores: Option<Vec<f64>>,
    /// Tuning parameter used, when the selector has one.
    pub lambda: Option<f64>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl SelectionResult {
    /// Keep at most `cap` indices, preferring larger scores and then smaller
    /// indices. Without scores the smallest indices are kept.
    pub fn capped(mut self, cap: usize) -> Self {
        if self.selected.len() <= cap {
            return self;
        }
        let mut ranked = self.selected.clone();
        if let Some(scores) = &self.scores {
            ranked.sort_by(|&a, &b| rank_order(scores[a], scores[b]).then(a.cmp(&b)));
        }
        ranked.truncate(cap);
        ranked.sort_unstable();
        self.warnings
            .push(format!("selected set truncated from {} to {cap}", self.selected.len()));
        self.selected = ranked;
        self
    }
}

/// Descending by score with NaN last.
pub(crate) fn rank_order(a: f64, b: f64) -> std::cmp::Ordering {
    let ka = if a.is_nan() { f64::NEG_INFINITY } else { a };
    let kb = if b.is_nan() { f64::NEG_INFINITY } else { b };
    kb.partial_cmp(&ka).unwrap_or(std::cmp::Ordering::Equal)
}

/// A selection procedure applied to `(y, x)`. `stream` is the randomness
/// reserved for the call (cross-validation folds and the like).
pub trait Selector: Send + Sync {
    fn select(&self, y: &[f64], x: &DMatrix<f64>, family: Family, stream: Stream) -> Result<SelectionResult>;

    fn name(&self) -> String;
}

/// Serializable selector configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SelectorSpec {
    Sis {
        #[serde(default)]
        cap: Option<usize>,
    },
    Isis {
        #[serde(default)]
        cap: Option<usize>,
        #[serde(default = "default_max_iter")]
        max_iter: usize,
    },
    LassoCv {
        #[serde(default = "default_folds")]
        folds: usize,
        #[serde(default = "default_n_lambda")]
        n_lambda: usize,
    },
}

fn default_folds() -> usize {
    10
}

fn default_max_iter() -> usize {
    5
}

fn default_n_lambda() -> usize {
    100
}

impl Default for SelectorSpec {
    fn default() -> Self {
        SelectorSpec::Sis { cap: None }
    }
}

impl SelectorSpec {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "sis" => Ok(SelectorSpec::Sis { cap: None }),
            "isis" => Ok(SelectorSpec::Isis {
                cap: None,
                max_iter: default_max_iter(),
            }),
            "lasso-cv" | "lasso" | "cv-lasso" => Ok(SelectorSpec::LassoCv {
                folds: default_folds(),
                n_lambda: default_n_lambda(),
            }),
            other => Err(crate::Error::InvalidArgument(format!("unknown selector `{other}`"))),
        }
    }

    pub fn build(&self) -> Box<dyn Selector> {
        match *self {
            SelectorSpec::Sis { cap } => Box::new(Sis { cap }),
            SelectorSpec::Isis { cap, max_iter } => Box::new(Isis { cap, max_iter }),
            SelectorSpec::LassoCv { folds, n_lambda } => Box::new(CvLasso {
                folds,
                n_lambda,
                ..CvLasso::default()
            }),
        }
    }
}
