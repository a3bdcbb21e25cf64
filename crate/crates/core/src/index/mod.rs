//! Exact in-memory retrieval indexes.
//!
//! Both index families score with 64-bit cosine over 32-bit stored vectors
//! and break score ties by ascending doc_id, so rankings are deterministic
//! and reproducible. Retrieval is an exact brute-force scan: at the corpus
//! scales this engine targets, exactness is affordable and is required for
//! metric fidelity. Approximate structures are out of scope.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::{DenseEmbedding, MultiVectorEmbedding};

mod dense;
mod late;
mod snapshot;

pub use dense::DenseIndex;
pub use late::LateIndex;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("vector has dim {got}, expected {want}")]
    DimMismatch { want: usize, got: usize },
    #[error("doc `{doc_id}`: zero-norm vector, cosine undefined")]
    ZeroVector { doc_id: String },
    #[error("zero-norm input vector, cosine undefined")]
    ZeroNorm,
    #[error("duplicate doc_id `{doc_id}`")]
    DuplicateDocId { doc_id: String },
    #[error("index must contain at least one document")]
    Empty,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: corrupt snapshot: {message}")]
    Corrupt {
        path: std::path::PathBuf,
        message: String,
    },
}

/// One retrieved document with its similarity score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredDoc {
    pub doc_id: String,
    pub score: f64,
}

/// Ranked retrieval output for one query: scores non-increasing, doc_ids
/// distinct, at most k entries. Produced only by index queries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedResult {
    /// Empty until the harness attaches the originating question's id.
    pub query_id: String,
    pub hits: Vec<ScoredDoc>,
}

impl RankedResult {
    /// 1-based rank of `doc_id`, if retrieved.
    pub fn rank_of(&self, doc_id: &str) -> Option<usize> {
        self.hits
            .iter()
            .position(|h| h.doc_id == doc_id)
            .map(|p| p + 1)
    }
}

pub(crate) fn dot_f64(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(&x, &y)| f64::from(x) * f64::from(y))
        .sum()
}

/// Cosine similarity q·e / (‖q‖‖e‖), in [-1, 1] up to rounding.
pub fn cosine_score(q: &DenseEmbedding, e: &DenseEmbedding) -> Result<f64, IndexError> {
    if q.dim() != e.dim() {
        return Err(IndexError::DimMismatch {
            want: q.dim(),
            got: e.dim(),
        });
    }
    let qn = q.l2_norm();
    let en = e.l2_norm();
    if qn == 0.0 || en == 0.0 {
        return Err(IndexError::ZeroNorm);
    }
    Ok(dot_f64(q.values(), e.values()) / (qn * en))
}

/// Late-interaction score of one document group: the best cosine between the
/// query and any vector in the group.
pub fn maxsim_score(q: &DenseEmbedding, doc: &MultiVectorEmbedding) -> Result<f64, IndexError> {
    let mut best = f64::NEG_INFINITY;
    for v in doc.vectors() {
        best = best.max(cosine_score(q, v)?);
    }
    Ok(best)
}

/// Full late-interaction score: sum over query vectors of the best cosine
/// against the document group. For a single-vector query this reduces to
/// [`maxsim_score`].
pub fn sum_maxsim_score(
    q: &MultiVectorEmbedding,
    doc: &MultiVectorEmbedding,
) -> Result<f64, IndexError> {
    let mut total = 0.0;
    for qv in q.vectors() {
        total += maxsim_score(qv, doc)?;
    }
    Ok(total)
}

/// Candidate ordering for top-k selection: `Greater` means ranked later
/// (lower score, then larger doc_id). A max-heap of these keeps the current
/// worst on top for eviction, and `into_sorted_vec` yields final rank order.
struct Candidate<'a> {
    score: f64,
    doc_id: &'a str,
}

impl PartialEq for Candidate<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate<'_> {}

impl PartialOrd for Candidate<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate<'_> {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .score
            .total_cmp(&self.score)
            .then_with(|| self.doc_id.cmp(other.doc_id))
    }
}

/// Selects the top k of `scored` in O(n log k); ties by ascending doc_id.
pub(crate) fn top_k<'a>(
    scored: impl Iterator<Item = (&'a str, f64)>,
    k: usize,
) -> Vec<ScoredDoc> {
    let mut heap: BinaryHeap<Candidate<'a>> = BinaryHeap::with_capacity(k + 1);
    for (doc_id, score) in scored {
        heap.push(Candidate { score, doc_id });
        if heap.len() > k {
            heap.pop();
        }
    }
    heap.into_sorted_vec()
        .into_iter()
        .map(|c| ScoredDoc {
            doc_id: c.doc_id.to_string(),
            score: c.score,
        })
        .collect()
}
