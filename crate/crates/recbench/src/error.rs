//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the benchmark pipeline.
///
/// The variants map onto the process exit codes used by the CLI:
/// configuration problems exit with 2, data problems with 3, and model
/// failures with 4.
#[derive(Debug, Error)]
pub enum Error {
    /// A dataset file could not be parsed.
    #[error("{path}:{line}: parse error: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    /// A dataset file contained no events.
    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    /// The evaluation protocol cannot be satisfied for a user.
    #[error("protocol error for user {user}: {message}")]
    Protocol { user: u32, message: String },

    /// Split files disagree with each other.
    #[error("split consistency error: {0}")]
    Consistency(String),

    /// An argument violated an operation's contract.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A fit produced non-finite numbers.
    #[error("numerical error in {model}: {message}")]
    Numerical { model: String, message: String },

    /// Iterative training diverged.
    #[error("training diverged in {model} at epoch {epoch} (learning rate {learning_rate})")]
    Diverged {
        model: String,
        epoch: usize,
        learning_rate: f64,
    },

    /// The experiment configuration is invalid.
    #[error("config error: {0}")]
    Config(String),

    /// Filesystem or serialization failure.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// A stored model or checkpoint container is malformed.
    #[error("container error: {0}")]
    Container(String),
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Exit code the CLI uses for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Parse { .. }
            | Error::EmptyDataset(_)
            | Error::Protocol { .. }
            | Error::Consistency(_)
            | Error::Io { .. }
            | Error::Container(_) => 3,
            Error::Contract(_) | Error::Numerical { .. } | Error::Diverged { .. } => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
