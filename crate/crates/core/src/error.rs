use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the pipeline library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: malformed record: {message}")]
    MalformedLine {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate document id {id:?}")]
    DuplicateDocId { id: String },

    #[error("unknown token {token:?}")]
    UnknownToken { token: String },

    #[error("unknown node {id:?}")]
    UnknownNode { id: String },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("assignment does not cover node {id:?}")]
    PartialAssignment { id: String },

    #[error("evidence on latent node {id:?} is not allowed")]
    LatentEvidence { id: String },

    #[error("evidence has probability zero under the model")]
    ZeroProbabilityEvidence,

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("topic {latent:?} has {got} words, need at least {need}")]
    TooFewTopicWords {
        latent: String,
        got: usize,
        need: usize,
    },

    #[error("token {token:?} occurs in no document")]
    ZeroDocumentFrequency { token: String },

    #[error("empty data: {0}")]
    EmptyData(String),

    #[error("need at least {need} variables, got {got}")]
    TooFewVariables { need: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
