use crate::io::ImageIoError;

/// Failure classes, each with its own exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<genre_core::Error> for CliError {
    fn from(e: genre_core::Error) -> Self {
        use genre_core::Error::*;
        let msg = e.to_string();
        match e {
            IllConditioned { .. } | Diverged { .. } => CliError::Numerical(msg),
            InvalidDimensions { .. } | ImageTooSmall { .. } | ShapeMismatch(_) | MalformedDump(_) => CliError::Io(msg),
            _ => CliError::Usage(msg),
        }
    }
}

impl From<ImageIoError> for CliError {
    fn from(e: ImageIoError) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
