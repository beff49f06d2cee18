//! Variance estimation, Wald intervals and p-values for the smoothed
//! estimator, and joint inference on a fixed subvector.

mod contrast;
pub mod dist;
mod report;
mod subvector;
mod variance;

pub use contrast::{contrast_test, ContrastTest};
pub use report::{coordinate_inference, infer, InferenceReport};
pub use subvector::{subvector_covariance, subvector_fit, SubvectorFit};
pub use variance::{
    bias_corrected_variance, covariance_components, finite_sample_factor, jackknife_variance, variance_estimate,
    VarianceEstimate,
};
