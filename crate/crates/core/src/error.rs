//! Crate-level error type and the coarse classification used to map failures
//! to process exit codes.

use std::path::PathBuf;

use thiserror::Error;

use crate::corpus::CorpusError;
use crate::embed::EmbedError;
use crate::harness::{ConfigError, ReportError};
use crate::index::IndexError;
use crate::metrics::MetricError;
use crate::qa_gen::GenError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse failure class. The CLI maps these to exit codes: configuration
/// problems exit 2, provider failures exit 3, data failures exit 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Provider,
    Data,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Report(#[from] ReportError),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Io { .. } => ErrorClass::Data,
            Error::Corpus(_) => ErrorClass::Data,
            Error::Embed(e) => e.class(),
            Error::Index(_) => ErrorClass::Data,
            Error::Metric(_) => ErrorClass::Data,
            Error::Gen(e) => e.class(),
            Error::Config(_) => ErrorClass::Config,
            Error::Report(_) => ErrorClass::Data,
        }
    }
}
