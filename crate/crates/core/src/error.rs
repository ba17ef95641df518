use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = DevNetError> = std::result::Result<T, E>;

/// Broad failure class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numeric,
}

#[derive(Debug, Error)]
pub enum DevNetError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    Shape {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("reference standard deviation {sigma_r:e} is below the numeric guard")]
    DegenerateReference { sigma_r: f64 },

    #[error("training diverged: non-finite gradient in {tensor}")]
    Divergence { tensor: String },

    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("batch size {batch_size} needs at least {needed} unlabeled rows, only {available} available; shrink the batch size")]
    BatchTooLarge {
        batch_size: usize,
        needed: usize,
        available: usize,
    },

    #[error("cannot read {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV")]
    Csv(#[from] csv::Error),

    #[error("label column {0:?} not found in header")]
    MissingLabelColumn(String),

    #[error("row {row} has {actual} cells, header has {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        actual: usize,
    },

    #[error("numeric column {0:?} has no observed values; its mean is undefined")]
    EmptyNumericColumn(String),

    #[error("class {class} has {count} member(s); stratified splitting needs at least 2")]
    ClassTooSmall { class: &'static str, count: usize },

    #[error("contamination rate {rate} requested but no anomalies are available")]
    NoAnomalies { rate: f64 },

    #[error("labeled-anomaly budget {requested} exceeds the {available} anomalies available; use a smaller budget")]
    BudgetTooLarge { requested: usize, available: usize },

    #[error("metric undefined: {0}")]
    UndefinedMetric(&'static str),

    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("model serialization failed")]
    Serialization(#[from] serde_json::Error),

    #[error("run with seed {seed} failed")]
    RunFailed {
        seed: u64,
        #[source]
        source: Box<DevNetError>,
    },
}

impl DevNetError {
    pub fn kind(&self) -> ErrorKind {
        use DevNetError::*;
        match self {
            InvalidConfig(_) | BatchTooLarge { .. } | BudgetTooLarge { .. } | OutOfRange(_) => {
                ErrorKind::Config
            }
            Shape { .. }
            | Io { .. }
            | Csv(_)
            | MissingLabelColumn(_)
            | RaggedRow { .. }
            | EmptyNumericColumn(_)
            | ClassTooSmall { .. }
            | NoAnomalies { .. }
            | SchemaMismatch(_)
            | Serialization(_)
            | UndefinedMetric(_)
            | DegenerateInput(_) => ErrorKind::Data,
            DegenerateReference { .. } | Divergence { .. } | NonFiniteLoss { .. } => {
                ErrorKind::Numeric
            }
            RunFailed { source, .. } => source.kind(),
        }
    }

    pub(crate) fn shape(
        context: &'static str,
        expected: impl ToString,
        actual: impl ToString,
    ) -> Self {
        DevNetError::Shape {
            context,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }
}
