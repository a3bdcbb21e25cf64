//! Evaluation metrics: ranking quality over retrieval judgments and lexical
//! answer quality over generated/reference pairs. Everything here is a pure
//! function; aggregation over levels happens in the harness.

use thiserror::Error;

pub mod retrieval;
pub mod semantic;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("metric over an empty collection is undefined")]
    EmptyInput,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("reference text has no tokens after normalization")]
    EmptyReference,
}
