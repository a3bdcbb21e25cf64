//! Benchmarking engine for comparing retrieval pipelines on labeled corpora.
//!
//! The crate evaluates competing retrieval configurations ("arms") against a
//! shared question set. Two index families are supported: a dense index that
//! ranks documents by cosine similarity against a single vector per document,
//! and a late-interaction index that keeps one vector per chunk and ranks by
//! the maximum (or sum of maxima) of per-chunk cosines. Every arm is scored
//! with the same retrieval metrics (MRR, Recall@k, NDCG@k), optionally with
//! answer-quality metrics (exact match, BLEU, ROUGE-1, ROUGE-L) over answers
//! produced by a pluggable generation provider, and optionally with an
//! efficiency profile (embedding time, retrieval latency, index footprint).
//!
//! A typical run:
//!
//! 1. [`corpus::load_corpus`] reads a line-delimited corpus of documents and
//!    question/answer pairs.
//! 2. Each arm embeds its configured text channel through an
//!    [`embed::EmbeddingProvider`] and builds a [`index::DenseIndex`] or
//!    [`index::LateIndex`].
//! 3. [`harness::run_experiment`] ranks every question against every arm,
//!    aggregates metrics per degradation level and in total, and writes a
//!    machine-readable report plus CSV tables.
//! 4. [`harness::radar_scores`] condenses the report into five comparable
//!    0..10 axes for cross-arm comparison.

pub mod corpus;
pub mod embed;
pub mod error;
pub mod harness;
pub mod index;
pub mod metrics;
pub mod qa_gen;

mod fnv;
mod http;

pub use error::{Error, ErrorClass, Result};
