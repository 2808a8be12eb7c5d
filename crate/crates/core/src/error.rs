use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("invalid image data: {0}")]
    Format(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("empty data set")]
    EmptyData,

    #[error("need at least {clusters} points, got {points}")]
    TooFewPoints { points: usize, clusters: usize },

    #[error("non-finite value in input")]
    NonFinite,

    #[error("degenerate clustering: {0}")]
    Degenerate(String),

    #[error("lumen mask is empty after cleanup")]
    EmptyMask,

    #[error("both masks are empty; overlap ratio undefined")]
    EmptyMasks,

    #[error("contour has no points")]
    EmptyContour,

    #[error("geometry out of frame: {0}")]
    Geometry(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
