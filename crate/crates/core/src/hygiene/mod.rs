//! Correlation, completeness, outlier and duplicate checks.

mod completeness;
mod correlation;
mod duplicates;
mod outliers;

pub use completeness::{
    assess_completeness, impute_missing, missing_locations, CompletenessConfig, ImputationReport, ImputedCell,
    ImputeStrategy,
};
pub use correlation::{
    assess_correlation, average_ranks, correlation_report, drop_correlated, spearman, CorrelatedPair,
    CorrelationConfig, CorrelationReport,
};
pub use duplicates::{assess_duplicates, duplicate_rows, remove_duplicates};
pub use outliers::{assess_outliers, lof_report, lof_scores, remove_outliers, LofReport, OutlierConfig};
