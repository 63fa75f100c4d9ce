use alloc::string::String;
use core::fmt;

/// Errors produced by the compression core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    EmptyCorpus,
    EmptyInput,
    InvalidToken(String),
    DimensionMismatch { expected: usize, found: usize, line: usize },
    Parse { line: usize, message: String },
    InvalidConfig(String),
    SentenceEmbedding { expected: usize, found: Option<usize> },
    ParamCount { expected: usize, found: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptyCorpus => write!(f, "empty corpus"),
            Error::EmptyInput => write!(f, "empty input sequence"),
            Error::InvalidToken(t) => write!(f, "invalid token {t:?}"),
            Error::DimensionMismatch { expected, found, line } => {
                write!(f, "line {line}: vector has {found} components, expected {expected}")
            }
            Error::Parse { line, message } => write!(f, "line {line}: {message}"),
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::SentenceEmbedding { expected, found } => match found {
                Some(n) => write!(f, "sentence embedding has dimension {n}, expected {expected}"),
                None if *expected == 0 => {
                    write!(f, "sentence embedding supplied but conditioning is disabled")
                }
                None => write!(f, "conditioning enabled but no sentence embedding supplied"),
            },
            Error::ParamCount { expected, found } => {
                write!(f, "parameter vector has {found} entries, expected {expected}")
            }
        }
    }
}

impl core::error::Error for Error {}
