//! Embedding types and pluggable embedding providers.
//!
//! Vectors are stored as 32-bit floats; scoring is done in 64-bit. Two
//! providers ship with the crate: [`DeterministicEmbedder`], a pure offline
//! hash embedder for tests and smoke runs, and [`RemoteEmbedder`], a client
//! for embeddings-endpoint services.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use thiserror::Error;

use crate::error::ErrorClass;

mod deterministic;
mod remote;

pub use deterministic::DeterministicEmbedder;
pub use remote::{RemoteEmbedder, RemoteEmbedderConfig};

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("cannot embed empty text")]
    EmptyText,
    #[error("embedding dimension must be positive")]
    ZeroDim,
    #[error("embedding has dim {got}, expected {want}")]
    DimMismatch { want: usize, got: usize },
    #[error("non-finite embedding value at position {index}")]
    NonFinite { index: usize },
    #[error("chunk list is empty")]
    EmptyChunkList,
    #[error("chunk {index}: {source}")]
    Chunk {
        index: usize,
        #[source]
        source: Box<EmbedError>,
    },
    #[error("embedding request failed after {attempts} attempt(s): {message}")]
    Provider { attempts: u32, message: String },
    #[error("malformed embedding response: {message}")]
    MalformedResponse { message: String },
    #[error("auth token variable `{var}` is not set")]
    MissingAuthToken { var: String },
}

impl EmbedError {
    pub fn class(&self) -> ErrorClass {
        match self {
            EmbedError::Provider { .. } | EmbedError::MalformedResponse { .. } => {
                ErrorClass::Provider
            }
            EmbedError::MissingAuthToken { .. } => ErrorClass::Config,
            EmbedError::Chunk { source, .. } => source.class(),
            _ => ErrorClass::Data,
        }
    }
}

/// A single d-dimensional vector. Construction guarantees d > 0 and finite
/// values, so downstream code never re-checks.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseEmbedding {
    values: Vec<f32>,
}

impl DenseEmbedding {
    pub fn new(values: Vec<f32>) -> Result<Self, EmbedError> {
        if values.is_empty() {
            return Err(EmbedError::ZeroDim);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(EmbedError::NonFinite { index });
        }
        Ok(DenseEmbedding { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// Euclidean norm, accumulated in f64.
    pub fn l2_norm(&self) -> f64 {
        self.values
            .iter()
            .map(|&v| {
                let v = f64::from(v);
                v * v
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// An ordered set of m same-dimension vectors: one document's chunk
/// embeddings for late-interaction scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiVectorEmbedding {
    vectors: Vec<DenseEmbedding>,
}

impl MultiVectorEmbedding {
    pub fn new(vectors: Vec<DenseEmbedding>) -> Result<Self, EmbedError> {
        let Some(first) = vectors.first() else {
            return Err(EmbedError::EmptyChunkList);
        };
        let dim = first.dim();
        for v in &vectors {
            if v.dim() != dim {
                return Err(EmbedError::DimMismatch {
                    want: dim,
                    got: v.dim(),
                });
            }
        }
        Ok(MultiVectorEmbedding { vectors })
    }

    pub fn vectors(&self) -> &[DenseEmbedding] {
        &self.vectors
    }

    pub fn m(&self) -> usize {
        self.vectors.len()
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].dim()
    }
}

/// Boundary to the embedding model. Implementations must be safe for
/// concurrent calls; the engine fans out up to its configured worker count
/// (profiled timing runs force one call in flight).
pub trait EmbeddingProvider: Send + Sync {
    /// Declared output dimensionality; every output must have exactly this dim.
    fn dim(&self) -> usize;

    /// Raw provider call. Callers normally go through [`embed_text`], which
    /// also enforces the output contract.
    fn embed(&self, text: &str) -> Result<DenseEmbedding, EmbedError>;
}

impl<T: EmbeddingProvider + ?Sized> EmbeddingProvider for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn embed(&self, text: &str) -> Result<DenseEmbedding, EmbedError> {
        (**self).embed(text)
    }
}

impl<T: EmbeddingProvider + ?Sized> EmbeddingProvider for Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn embed(&self, text: &str) -> Result<DenseEmbedding, EmbedError> {
        (**self).embed(text)
    }
}

/// Embeds one document-side text. Rejects empty input and verifies the
/// output dim matches the provider's declaration.
pub fn embed_text(
    provider: &dyn EmbeddingProvider,
    text: &str,
) -> Result<DenseEmbedding, EmbedError> {
    if text.trim().is_empty() {
        return Err(EmbedError::EmptyText);
    }
    let emb = provider.embed(text)?;
    if emb.dim() != provider.dim() {
        return Err(EmbedError::DimMismatch {
            want: provider.dim(),
            got: emb.dim(),
        });
    }
    Ok(emb)
}

/// Embeds every chunk of one document, in order. Atomic: if any chunk fails,
/// the whole document fails, so indexes never hold partially embedded docs.
pub fn embed_chunks<S: AsRef<str>>(
    provider: &dyn EmbeddingProvider,
    chunks: &[S],
) -> Result<MultiVectorEmbedding, EmbedError> {
    if chunks.is_empty() {
        return Err(EmbedError::EmptyChunkList);
    }
    let mut vectors = Vec::with_capacity(chunks.len());
    for (index, chunk) in chunks.iter().enumerate() {
        let v = embed_text(provider, chunk.as_ref()).map_err(|source| EmbedError::Chunk {
            index,
            source: Box::new(source),
        })?;
        vectors.push(v);
    }
    MultiVectorEmbedding::new(vectors)
}

/// Embeds a question. Same contract as [`embed_text`]; a distinct entry point
/// so query-side and document-side providers can differ per arm.
pub fn embed_query(
    provider: &dyn EmbeddingProvider,
    question: &str,
) -> Result<DenseEmbedding, EmbedError> {
    embed_text(provider, question)
}

/// Wraps a provider and counts calls. The profiler uses it to attribute
/// provider time and to verify one-call-per-unit batching.
pub struct CountingEmbedder<P> {
    inner: P,
    calls: AtomicU64,
}

impl<P: EmbeddingProvider> CountingEmbedder<P> {
    pub fn new(inner: P) -> Self {
        CountingEmbedder {
            inner,
            calls: AtomicU64::new(0),
        }
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }
}

impl<P: EmbeddingProvider> EmbeddingProvider for CountingEmbedder<P> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn embed(&self, text: &str) -> Result<DenseEmbedding, EmbedError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.embed(text)
    }
}
