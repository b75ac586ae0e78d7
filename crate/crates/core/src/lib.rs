//! Quality metrics, remediations and lineage for tabular ML datasets.
//!
//! Every metric scores a [`Dataset`] in `[0, 1]` (1 is best) and suggests
//! remediations; the [`Engine`] runs them and records each step in a
//! [`Ledger`] from which the readiness report is rendered.

pub mod dataset;
pub mod engine;
pub mod error;
pub mod fairness;
pub mod homogeneity;
pub mod hygiene;
pub mod overlap;
pub mod parity;
pub mod purity;
pub mod relevance;

pub use dataset::{ColumnKind, Dataset, LoadOptions, Value};
pub use engine::{Clock, DecisionFile, Engine, EngineConfig, Ledger, MetricId, QualityResult, RemediationOp};
pub use error::{Error, Result};
