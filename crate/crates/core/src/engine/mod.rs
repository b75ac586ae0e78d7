//! Uniform metric execution, lineage and reporting.

mod config;
mod decisions;
mod ledger;
mod report;
mod result;
mod runner;

pub use config::{EngineConfig, DEFAULT_SEED};
pub use decisions::{ColumnDecision, DecisionFile, RowDecision};
pub use ledger::{EntryKind, Ledger, LineageEntry};
pub use report::{render_report, ReadinessReport, ReportFormat, SummaryRow};
pub use result::{Assessment, Clock, MetricId, QualityResult, Recommendation, RemediationOp};
pub use runner::{evaluate, Engine, Remediation, RunSummary};
