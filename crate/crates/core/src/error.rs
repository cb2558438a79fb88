use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid location: {0}")]
    InvalidLocation(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Stacked multi-user channel matrix cannot be pseudo-inverted.
    #[error("singular channel stack: {0}")]
    SingularChannels(String),

    /// Fisher information matrix is numerically singular; the requested
    /// parameters are not identifiable under the given transmit design.
    #[error("unidentifiable parameters: {0}")]
    Unidentifiable(String),

    #[error("scenario: {0}")]
    Scenario(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code category for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidGeometry(_)
            | Error::InvalidLocation(_)
            | Error::InvalidArgument(_) => 2,
            Error::Scenario(_) | Error::Parse(_) => 3,
            Error::SingularChannels(_) | Error::Unidentifiable(_) => 4,
            Error::Io(_) => 5,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
