// SPDX-License-Identifier: MIT OR Apache-2.0

//! Error type shared by every module of the crate.

use std::path::PathBuf;

/// Errors raised by rule analysis, corpus handling, training and probing.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("not a lowercase Finnish word form: {0:?}")]
    InvalidForm(String),

    #[error("{nominative}/{genitive}: ambiguous alignment between {candidates:?}")]
    AmbiguousAlignment { nominative: String, genitive: String, candidates: Vec<String> },

    #[error("{nominative}/{genitive}: no genitive paradigm relates these forms")]
    NotAPair { nominative: String, genitive: String },

    #[error("{form:?}: neither grade of {pattern} found at offset {start}")]
    SiteMismatch { form: String, pattern: String, start: usize },

    #[error("{0:?} does not undergo gradation")]
    NotGradating(String),

    #[error("line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },

    #[error("file contains no examples")]
    EmptyFile,

    #[error("pattern {pattern}: only {available} distinct forms available for a quota of {quota}")]
    QuotaInfeasible { pattern: String, available: usize, quota: usize },

    #[error("probe pool has {available} gradating {consonant} examples, {needed} needed")]
    InsufficientPool { consonant: char, available: usize, needed: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty input sequence")]
    EmptyInput,

    #[error("non-finite loss at step {step}")]
    NonFiniteLoss { step: usize },

    #[error("evaluation set is empty")]
    EmptyEvalSet,

    #[error("version mismatch: expected {expected:?}, found {found:?}")]
    VersionMismatch { expected: String, found: String },

    #[error("corrupt checkpoint: {0}")]
    CorruptFile(String),

    #[error("activation group {0} is empty")]
    EmptyGroup(String),

    #[error("both samples have zero variance")]
    DegenerateVariance,

    #[error("{0:?} has no measurable site")]
    Excluded(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
