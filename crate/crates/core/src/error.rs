use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("design matrix is rank deficient: column `{column}` is collinear with [{}]", .with.join(", "))]
    RankDeficient { column: String, with: Vec<String> },

    #[error("missing score for video `{0}`")]
    MissingScore(String),

    #[error("missing prediction for item `{0}`")]
    MissingPrediction(String),

    #[error("scorer protocol error: {0}")]
    Protocol(String),

    #[error("scoring failed for video `{video_id}`: {message}")]
    Scoring { video_id: String, message: String },

    #[error("optimizer inconsistency: {0}")]
    Inconsistent(String),

    #[error("all {reps} bootstrap replicates failed: {histogram:?}")]
    BootstrapFailed {
        reps: usize,
        histogram: std::collections::BTreeMap<String, usize>,
    },

    #[error("annotation service: {0}")]
    Service(#[from] crate::annotation::store::StoreError),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
