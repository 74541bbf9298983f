use std::io;

use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("invalid phrase: {0}")]
    InvalidPhrase(String),

    #[error("no weight given for feature `{0}`")]
    MissingWeight(String),

    #[error("feature name `{0}` is already in the manifest")]
    NameCollision(String),

    #[error("duplicate phrase pair `{src} ||| {tgt}`")]
    DuplicatePair { src: String, tgt: String },

    #[error("unknown morphological feature `{0}`")]
    UnknownFeature(String),

    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, reason: impl Into<String>) -> Self {
        Error::Parse {
            line,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
