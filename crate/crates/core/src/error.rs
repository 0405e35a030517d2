use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid kernel order {0}: must be non-negative")]
    InvalidOrder(i64),
    #[error("truncation threshold {0} outside (0, 1)")]
    InvalidEpsilon(f64),
    #[error("angle-weight set is empty")]
    EmptySet,
    #[error("angle-weight set has {angles} angles but {weights} weights")]
    LengthMismatch { angles: usize, weights: usize },
    #[error("invalid sample at index {index}: {reason}")]
    InvalidSample { index: usize, reason: &'static str },
    #[error("order mismatch: {left} vs {right}")]
    OrderMismatch { left: usize, right: usize },
    #[error("canonicalization level {level} outside 1..={order}")]
    LevelOutOfRange { level: usize, order: usize },
    #[error("image too small: {rows}x{cols}, need at least {min}x{min}")]
    ImageTooSmall { rows: usize, cols: usize, min: usize },
    #[error("image dimensions differ: {0:?} vs {1:?}")]
    ShapeMismatch((usize, usize), (usize, usize)),
    #[error("window {window:?} does not fit image {image:?}")]
    WindowTooLarge { window: (usize, usize), image: (usize, usize) },
    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error("mask diameter {diameter} exceeds patch size {rows}x{cols}")]
    MaskTooLarge { diameter: f64, rows: usize, cols: usize },
    #[error("noise scale must be positive, got {0}")]
    InvalidSigma(f64),
    #[error("histogram needs at least 2 bins, got {0}")]
    TooFewBins(usize),
    #[error("{0} distance list is empty")]
    EmptyDistances(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown method `{0}`")]
    UnknownMethod(String),
    #[error("{path}:{line}: {reason}")]
    Parse { path: PathBuf, line: usize, reason: String },
    #[error("{path}: patch is {rows}x{cols}, expected square {expected}x{expected}")]
    BadPatch { path: PathBuf, rows: usize, cols: usize, expected: usize },
    #[error("pair references unknown patch id `{0}`")]
    UnknownPatch(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Image { path: PathBuf, source: image::ImageError },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for failures of the file system or of file decoding, as opposed to
    /// invalid parameters or numerical preconditions.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            Error::Io { .. } | Error::Image { .. } | Error::Json { .. } | Error::Parse { .. } | Error::BadPatch { .. }
        )
    }
}
