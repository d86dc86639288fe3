use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("kernel matrix is ill-conditioned (condition estimate {0:e})")]
    IllConditioned(f64),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed input: {0}")]
    Parse(String),
}

impl Error {
    /// Process exit code for the CLI: 2 usage, 3 I/O, 4 malformed input,
    /// 5 numerical or invariant failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) => 2,
            Error::Io { .. } => 3,
            Error::Parse(_) | Error::DimensionMismatch { .. } => 4,
            Error::Invariant(_) | Error::IllConditioned(_) | Error::NonFinite(_) => 5,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn invariant(msg: impl Into<String>) -> Self {
        Error::Invariant(msg.into())
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}
