//! Correlation with human judgments and significance testing.

mod correlation;
mod report;
mod ttest;

use thiserror::Error;

pub use correlation::{pearson, ranks, spearman, PairedSample};
pub use report::{
    build_report, compare_metrics, render_table, summarize, CorrelationReport, CorrelationRow, EvaluationSummary,
    MetricAverage, SignificanceComparison,
};
pub use ttest::{
    ln_gamma, paired_t_test, regularized_incomplete_beta, student_t_cdf, student_t_upper_tail, Alternative,
    TTestOutcome,
};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least {min} points, got {n}")]
    TooFewPoints { n: usize, min: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("non-finite value in sample")]
    NonFinite,
    #[error("zero variance")]
    ZeroVariance,
    #[error("metric {metric:?} has no score for human-scored system {system:?}")]
    MissingSystem { metric: String, system: String },
    #[error("metric {metric:?} scores system {system:?} twice")]
    DuplicateSystem { metric: String, system: String },
    #[error("correlation needs at least 3 human-scored systems, got {0}")]
    InsufficientSystems(usize),
    #[error("metric {0:?} not present in every report")]
    UnknownMetric(String),
    #[error("significance level must lie strictly between 0 and 1, got {0}")]
    InvalidAlpha(f64),
}
