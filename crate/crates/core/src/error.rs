use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown scenario `{name}` (available: {})", available.join(", "))]
    UnknownScenario {
        name: String,
        available: Vec<String>,
    },

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("ray list is empty")]
    EmptyRays,

    #[error("sample period must be positive, got {0} ns")]
    NonPositivePeriod(f64),

    #[error("distance must be positive, got {0} m")]
    NonPositiveDistance(f64),

    #[error("distances must be strictly increasing (index {index})")]
    NonMonotoneDistances { index: usize },

    #[error("series is empty or too short: {0}")]
    EmptySeries(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("all estimates are non-positive; logarithm undefined")]
    AllNonPositive,

    #[error("central ray has zero delay and is not a cursor ray")]
    ZeroDelay,

    #[error("transmitter and receiver positions coincide")]
    CoincidentEndpoints,

    #[error("single-ray snapshot: K-factor is infinite")]
    InfiniteKFactor,

    #[error("degenerate sample: all values equal")]
    DegenerateSample,

    #[error("non-positive sample {value} at index {index}")]
    NonPositiveSample { index: usize, value: f64 },

    #[error("input samples are all zero")]
    AllZeroInput,

    #[error("all distances are equal; regression slope undefined")]
    ZeroDistanceSpread,

    #[error("invalid snapshot: {0}")]
    InvalidSnapshot(String),

    #[error("fit failed: {0}")]
    FitFailed(String),

    #[error("trajectory has no legs")]
    EmptyLegs,

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 validation, 2 I/O, 3 numerical or fit failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 2,
            Error::InsufficientData(_)
            | Error::AllNonPositive
            | Error::InfiniteKFactor
            | Error::DegenerateSample
            | Error::AllZeroInput
            | Error::ZeroDistanceSpread
            | Error::FitFailed(_) => 3,
            _ => 1,
        }
    }
}
