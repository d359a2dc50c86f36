use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = DcpfError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum DcpfError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("empty result: {0}")]
    EmptyResult(String),

    #[error("model format error: {0}")]
    Format(String),

    #[error("dataset incomplete after {attempts} attempts: bucket counts {counts:?}, quotas {quotas:?}")]
    PartialDataset {
        attempts: usize,
        counts: [usize; 3],
        quotas: [usize; 3],
        /// Records generated before giving up, bucket-ordered.
        records: Vec<crate::dataset::DatasetRecord>,
    },

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl DcpfError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        DcpfError::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DcpfError::Io {
            path: path.into(),
            source,
        }
    }
}
