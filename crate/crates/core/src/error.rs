//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by image decoding, model I/O, and the learning routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported image format")]
    UnsupportedFormat,
    #[error("corrupt image payload: {0}")]
    CorruptPayload(String),
    #[error("target dimensions must be at least 1x1")]
    ZeroDimension,
    #[error("window does not intersect the image")]
    EmptyIntersection,
    #[error("edge map contains no edge pixels")]
    EmptyEdgeMap,
    #[error("dataset contains no images or no ground-truth objects")]
    EmptyDataset,
    #[error("no positive training windows; check the ground truth and overlap threshold")]
    NoPositives,
    #[error("no ground-truth objects")]
    NoGroundTruth,
    #[error("malformed model file: {0}")]
    MalformedModelFile(String),
    #[error("malformed annotation: {0}")]
    MalformedAnnotation(String),
    #[error("model not available: {0}")]
    ModelMissing(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
