//! Simulation scenarios: design, truth and response generators, and the
//! replication engine that aggregates bias, standard errors, coverage,
//! selection frequency and rejection rates.

mod generate;
mod run;
mod scenario;

pub use generate::{auc, gen_design, gen_response, gen_truth, linear_predictor};
pub use run::{
    contrast_scenario, q_sweep, run_scenario, ContrastRate, ContrastReport, CoordinateMetrics, MetricsReport,
    NoiseSummary,
};
pub use scenario::{ContrastSpec, ContrastStudy, Correlation, SimFamily, SimScenario, TruthSpec};
