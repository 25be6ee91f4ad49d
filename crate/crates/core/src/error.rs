use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left}D vs {right}D")]
    DimensionMismatch { left: usize, right: usize },

    #[error("unsupported dimension {0}, expected 2 or 3")]
    UnsupportedDimension(usize),

    #[error("invalid box: {0}")]
    InvalidBox(String),

    #[error("ego pose is required for ego-centric contour error")]
    MissingEgo,

    #[error("threshold must be positive and finite, got {0}")]
    InvalidThreshold(f64),

    #[error("invalid cost matrix: {0}")]
    InvalidCostMatrix(String),

    #[error("ground-truth center coincides with the ego position")]
    ZeroEgoDistance,

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
