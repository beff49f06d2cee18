//! Dataset ingestion, text specifications and tabular outputs.

mod config;
mod dataset;
mod interactions;
mod spec;
mod tables;

pub use config::{Command, RunConfig};
pub use dataset::{load_dataset, parse_dataset, LoadOptions};
pub use interactions::expand_interactions;
pub use spec::{parse_matrix, parse_subset, parse_vector};
pub use tables::{
    contrast_report_csv, contrast_test_csv, format_sig6, metrics_csv, q_mse_csv, result_table, summary_csv,
    timing_csv, write_dataset, ResultRow, ResultTable, INTERCEPT_LABEL,
};
