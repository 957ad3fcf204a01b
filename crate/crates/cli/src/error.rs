use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] lsr_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    /// `line` is 1-based and counts the header.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: String,
        message: String,
    },
    #[error("line {line}: duplicate triple ({sender}, {receiver}, time {time})")]
    DuplicateTriple {
        line: usize,
        sender: String,
        receiver: String,
        time: i64,
    },
    #[error("line {line}: self loop, {label} is both sender and receiver")]
    SelfLoop { line: usize, label: String },
    #[error("ragged panel: {0}")]
    RaggedTime(String),
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, column: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column: column.into(),
            message: message.into(),
        }
    }
}
