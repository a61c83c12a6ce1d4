use std::path::PathBuf;

use thiserror::Error;

/// Errors produced across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("validation: {0}")]
    Validation(String),
    #[error("query has no relevant images: {0}")]
    UndefinedQuery(String),
    #[error("{path}: bad magic, not a {expected} file")]
    BadMagic { path: PathBuf, expected: &'static str },
    #[error("{path}: unsupported format version {found} (expected {expected})")]
    VersionMismatch {
        path: PathBuf,
        found: u32,
        expected: u32,
    },
    #[error("{path}: file truncated ({context})")]
    Truncated { path: PathBuf, context: String },
    #[error("{path}: non-finite value in {context}")]
    NonFinite { path: PathBuf, context: String },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the CLI: 1 validation, 2 I/O, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_)
            | Error::DegenerateInput(_)
            | Error::EmptyInput(_)
            | Error::Config(_)
            | Error::Validation(_)
            | Error::UndefinedQuery(_) => 1,
            Error::BadMagic { .. }
            | Error::VersionMismatch { .. }
            | Error::Truncated { .. }
            | Error::NonFinite { .. }
            | Error::Io(_) => 2,
            Error::Numerical(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
