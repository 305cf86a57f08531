use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{name} out of {range}: {value}")]
    OutOfRange {
        name: &'static str,
        range: &'static str,
        value: f64,
    },

    #[error("{what} must be at least {min}, got {got}")]
    TooSmall {
        what: &'static str,
        min: usize,
        got: usize,
    },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("iteration diverged at round {round}: objective is {value}")]
    Diverged { round: usize, value: f64 },

    #[error("channel index {index} out of range for {channels} channels")]
    ChannelIndex { index: usize, channels: usize },

    #[error("objective {objective:?} is not defined for this state")]
    UnsupportedObjective { objective: &'static str },

    #[error("accelerated round requested without momentum memory")]
    MissingMomentum,

    #[error("network has no nodes")]
    EmptyNetwork,

    #[error("swap rejected: {0}")]
    SwapRejected(String),

    #[error("eigensolver did not converge")]
    Eigensolver,

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub(crate) fn io(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        Error::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}

pub(crate) fn check_unit_open(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            range: "(0,1)",
            value,
        })
    }
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
