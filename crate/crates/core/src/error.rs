use std::path::PathBuf;

use thiserror::Error;

/// Localization stage that produced a failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Pupil,
    Iris,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Stage::Pupil => f.write_str("pupil"),
            Stage::Iris => f.write_str("iris"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("decode error at byte offset {offset}: {reason}")]
    Decode { offset: usize, reason: String },

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("invalid dimensions: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("no pupil candidate found: {0}")]
    NoPupil(String),

    #[error("localization failed at {stage} stage: {reason}")]
    LocalizationFailed { stage: Stage, reason: String },

    #[error("sampling circle at ({x}, {y}) with radius {radius} leaves the grid")]
    OutOfBounds { x: f64, y: f64, radius: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("record {record}: dimension {actual}, expected {expected}")]
    RecordDimension {
        record: String,
        expected: usize,
        actual: usize,
    },

    #[error("ensemble member {index}: {source}")]
    Member {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("data error: {0}")]
    Data(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("format error in {what} at line {line}: {reason}")]
    Format {
        what: &'static str,
        line: usize,
        reason: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit status of the `iris` command for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Parameter(_) => 2,
            Error::Io { .. }
            | Error::Decode { .. }
            | Error::UnsupportedFormat(_)
            | Error::Format { .. } => 3,
            Error::LocalizationFailed { .. } | Error::NoPupil(_) => 4,
            Error::DimensionMismatch { .. } | Error::RecordDimension { .. } => 5,
            Error::Member { source, .. } => source.exit_code(),
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
