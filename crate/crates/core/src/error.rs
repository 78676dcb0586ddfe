use std::path::PathBuf;

/// Errors produced anywhere in the admission pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("csv parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("harmonization error: column `{column}` is {first} in one table and {second} in another")]
    Harmonization {
        column: String,
        first: &'static str,
        second: &'static str,
    },

    #[error("column `{0}` has no observed values")]
    AllMissing(String),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("column `{column}`: {message}")]
    ColumnKind { column: String, message: String },

    #[error("row {row}: value {value} outside [0, 1]")]
    OutOfRange { row: u64, value: f64 },

    #[error("missing field {0}")]
    MissingField(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("feature mismatch: {0}")]
    FeatureMismatch(String),

    #[error("non-finite value in feature `{feature}` at row {row}")]
    NonFinite { feature: String, row: usize },

    #[error("invalid training data: {0}")]
    Training(String),

    #[error("fold count k={k} exceeds minority class count {minority}")]
    FoldCount { k: usize, minority: usize },

    #[error("fairness audit: {0}")]
    Fairness(String),

    #[error("{0}")]
    Unsupported(String),

    #[error("scorer `{scorer}` failed: {message}")]
    Scorer {
        scorer: String,
        message: String,
        raw_response: Option<String>,
    },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps the error with the pipeline stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            other => Error::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }
}
