use std::path::PathBuf;

/// Errors produced by the calibration toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("input is empty")]
    EmptyInput,

    #[error("calibration set is empty")]
    EmptyCalibration,

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("invalid multiprobability: p0 = {p0} exceeds p1 = {p1}")]
    InvalidMultiprobability { p0: f64, p1: f64 },

    #[error("invalid score {value} at index {index}")]
    InvalidScore { index: usize, value: f64 },

    #[error("proper-training fraction must lie strictly between 0 and 1, got {0}")]
    InvalidFraction(f64),

    #[error("record {0} has no degree target")]
    MissingTarget(usize),

    #[error("degree targets have zero variance")]
    DegenerateTargets,

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("line {line}: label required but missing (id {id:?})")]
    MissingLabels { line: usize, id: String },

    #[error("line {line}: duplicate id {id:?}")]
    DuplicateId { line: usize, id: String },

    #[error("invalid calibrator artifact: {0}")]
    Artifact(String),

    #[error("cannot access {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidValue(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for filesystem failures, as opposed to validation failures.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
