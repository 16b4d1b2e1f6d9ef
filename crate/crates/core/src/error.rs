use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised across the crate.
///
/// Variants are grouped by [`ErrorKind`], which the command-line front end
/// maps onto its exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unknown motion kind `{0}`")]
    UnknownMotion(String),

    #[error("frame count must be at least 1")]
    EmptyTrajectory,

    #[error("empty sequence")]
    EmptySequence,

    #[error("depth must be positive and finite, got {0}")]
    NonPositiveDepth(f64),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("window {window} must be in 1..{frames}")]
    InvalidWindow { window: usize, frames: usize },

    #[error("need at least 3 points for alignment, got {0}")]
    TooFewPoints(usize),

    #[error("point configuration is rank deficient")]
    RankDeficient,

    #[error("baseline {0:e} is below the degenerate-pair threshold")]
    DegeneratePair(f64),

    #[error("every motion step is degenerate")]
    AllStepsDegenerate,

    #[error("zero-motion calibration set")]
    ZeroMotionCalibration,

    #[error("bad tensor magic {0:?}")]
    BadMagic([u8; 4]),

    #[error("unsupported format version {0}")]
    UnknownVersion(u16),

    #[error("unsupported dtype code {0}")]
    UnknownDtype(u8),

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("quaternion norm {0} is too far from 1")]
    NonUnitQuaternion(f64),

    #[error("malformed document: {0}")]
    Format(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Io,
    Numeric,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io(_)
            | Error::BadMagic(_)
            | Error::UnknownVersion(_)
            | Error::UnknownDtype(_)
            | Error::Truncated { .. }
            | Error::NonUnitQuaternion(_)
            | Error::Format(_) => ErrorKind::Io,
            Error::RankDeficient
            | Error::DegeneratePair(_)
            | Error::AllStepsDegenerate
            | Error::ZeroMotionCalibration
            | Error::Numeric(_) => ErrorKind::Numeric,
            _ => ErrorKind::Validation,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
