use crate::pose::Pose2;
use crate::scan::PowerUnit;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("expected a {expected:?} scan, got {found:?}")]
    WrongUnit { expected: PowerUnit, found: PowerUnit },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed scan file: {0}")]
    Format(String),

    #[error("unsupported scan file version {0}")]
    UnsupportedVersion(u16),

    #[error("no correspondences within range at ICP iteration {iteration}")]
    NoCorrespondences { pose: Pose2, iteration: usize },

    #[error("{0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl From<toml::de::Error> for Error {
    fn from(e: toml::de::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<toml::ser::Error> for Error {
    fn from(e: toml::ser::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::Io(io),
                _ => unreachable!("checked is_io_error"),
            }
        } else {
            Error::Parse(e.to_string())
        }
    }
}
