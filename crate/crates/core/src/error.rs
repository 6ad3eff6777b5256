use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Numeric,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("row {row}: {message}")]
    Row { row: usize, message: String },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("length mismatch: {what} has {actual} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("propensity at sample {index} is {value}, must be strictly positive")]
    NonPositivePropensity { index: usize, value: f64 },

    #[error("policy has no overlap with logged actions")]
    NoOverlap,

    #[error("ATENP group is empty (group one: {group_one}, group two: {group_two})")]
    EmptyGroup { group_one: usize, group_two: usize },

    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error(
        "logging policy never reached accuracy band [{lo}, {hi}] within {epochs} epochs; best {best:.4} at epoch {best_epoch}"
    )]
    BandNotReached {
        lo: f64,
        hi: f64,
        epochs: usize,
        best: f64,
        best_epoch: usize,
    },

    #[error("all {0} candidate runs were flagged (zero overlap)")]
    AllCandidatesFlagged(usize),

    #[error("malformed document: {0}")]
    Format(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io { .. } => ErrorKind::Io,
            Error::InvalidArgument(_) => ErrorKind::Usage,
            Error::Diverged { .. } | Error::NonFinite(_) | Error::NoOverlap | Error::AllCandidatesFlagged(_) => {
                ErrorKind::Numeric
            }
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
