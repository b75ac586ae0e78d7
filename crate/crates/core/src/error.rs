use std::path::PathBuf;

use crate::engine::MetricId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("input file not found: {0}")]
    MissingFile(PathBuf),

    #[error("ragged row at line {line}: expected {expected} fields, found {found}")]
    RaggedRow {
        line: u64,
        expected: usize,
        found: usize,
    },

    #[error("dataset has no data rows")]
    EmptyDataset,

    #[error("unknown column '{0}'")]
    UnknownColumn(String),

    #[error("target required")]
    TargetRequired,

    #[error("{0}")]
    Invalid(String),

    #[error("decisions answer fingerprint {answers}, current result is {current}")]
    StaleDecisions { answers: String, current: String },

    #[error("lineage chain broken: ledger head is {expected}, dataset is {found}")]
    ChainBroken { expected: String, found: String },

    #[error("no program within bounds for the given annotation")]
    NoProgram,

    #[error("transform aborted; offending rows: {rows:?}")]
    TransformAborted { rows: Vec<usize> },

    #[error("{metric}: {source}")]
    Metric {
        metric: MetricId,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
