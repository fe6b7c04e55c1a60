use std::path::{Path, PathBuf};

/// Errors of the file formats and the command line.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A missing or ill-typed field, located by its JSON path.
    #[error("{path}: {message}")]
    Schema { path: String, message: String },

    /// A kernel error raised while decoding or resolving the value at `path`.
    #[error("{path}: {source}")]
    At { path: String, source: vmt_core::Error },

    #[error("malformed JSON: {0}")]
    Syntax(#[from] serde_json::Error),

    #[error("{0}")]
    Weights(String),

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] vmt_core::Error),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{}: {source}", path.display())]
    Image { path: PathBuf, source: image::ImageError },

    /// Any other error, prefixed with the file it concerns.
    #[error("{}: {source}", path.display())]
    InFile { path: PathBuf, source: Box<Error> },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema { path: path.into(), message: message.into() }
    }

    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        Error::Io { path: path.as_ref().to_path_buf(), source }
    }

    /// Attaches `path` unless the error already names a file.
    pub fn in_file(self, path: impl AsRef<Path>) -> Self {
        match self {
            e @ (Error::Io { .. } | Error::Image { .. } | Error::InFile { .. }) => e,
            e => Error::InFile { path: path.as_ref().to_path_buf(), source: Box::new(e) },
        }
    }

    /// 2 for I/O failures, 1 for everything the user can fix in the input.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::Image { .. } => 2,
            Error::InFile { source, .. } => source.exit_code(),
            _ => 1,
        }
    }
}
