//! Single-vector index: one embedding per document, ranked by cosine.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use crate::embed::DenseEmbedding;

use super::snapshot::{SnapshotReader, SnapshotWriter, VERSION};
use super::{dot_f64, top_k, IndexError, RankedResult};

const MAGIC: &[u8; 4] = b"DRIX";

/// Immutable after build; safe for unlimited concurrent queries.
#[derive(Debug, Clone)]
pub struct DenseIndex {
    dim: usize,
    doc_ids: Vec<String>,
    /// Row-major, len = count * dim.
    vectors: Vec<f32>,
    /// Precomputed at build so queries only normalize themselves.
    norms: Vec<f64>,
}

impl DenseIndex {
    /// Builds from (doc_id, embedding) pairs. Requires at least one pair,
    /// uniform dim, distinct ids, and non-zero vectors (cosine is undefined
    /// otherwise). Insertion order never affects query scores.
    pub fn build(pairs: Vec<(String, DenseEmbedding)>) -> Result<Self, IndexError> {
        let Some((_, first)) = pairs.first() else {
            return Err(IndexError::Empty);
        };
        let dim = first.dim();
        let mut doc_ids = Vec::with_capacity(pairs.len());
        let mut vectors = Vec::with_capacity(pairs.len() * dim);
        let mut norms = Vec::with_capacity(pairs.len());
        let mut seen = BTreeSet::new();
        for (doc_id, emb) in pairs {
            if emb.dim() != dim {
                return Err(IndexError::DimMismatch {
                    want: dim,
                    got: emb.dim(),
                });
            }
            let norm = emb.l2_norm();
            if norm == 0.0 {
                return Err(IndexError::ZeroVector { doc_id });
            }
            if !seen.insert(doc_id.clone()) {
                return Err(IndexError::DuplicateDocId { doc_id });
            }
            vectors.extend_from_slice(emb.values());
            norms.push(norm);
            doc_ids.push(doc_id);
        }
        Ok(DenseIndex {
            dim,
            doc_ids,
            vectors,
            norms,
        })
    }

    pub fn len(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    fn row(&self, i: usize) -> &[f32] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    /// Exact top-k by cosine, ties broken by ascending doc_id. The query is
    /// normalized once; k larger than the index clamps to all documents.
    pub fn query(&self, q: &DenseEmbedding, k: usize) -> Result<RankedResult, IndexError> {
        if k == 0 {
            return Err(IndexError::InvalidK);
        }
        if q.dim() != self.dim {
            return Err(IndexError::DimMismatch {
                want: self.dim,
                got: q.dim(),
            });
        }
        if self.doc_ids.is_empty() {
            return Err(IndexError::Empty);
        }
        let qn = q.l2_norm();
        if qn == 0.0 {
            return Err(IndexError::ZeroNorm);
        }
        let hits = top_k(
            (0..self.len()).map(|i| {
                let score = dot_f64(q.values(), self.row(i)) / (qn * self.norms[i]);
                (self.doc_ids[i].as_str(), score)
            }),
            k,
        );
        Ok(RankedResult {
            query_id: String::new(),
            hits,
        })
    }

    /// Exact on-disk size of [`Self::write_snapshot`]'s output.
    pub fn snapshot_bytes(&self) -> u64 {
        let header = 4 + 4 + 4 + 8u64;
        let ids: u64 = self.doc_ids.iter().map(|id| 4 + id.len() as u64).sum();
        header + ids + (self.vectors.len() as u64) * 4
    }

    /// Rough accounting of the resident footprint: vector payload, norms,
    /// and the id table with container overhead.
    pub fn in_memory_bytes(&self) -> u64 {
        let ids: u64 = self
            .doc_ids
            .iter()
            .map(|id| (id.len() + std::mem::size_of::<String>()) as u64)
            .sum();
        ids + (self.vectors.len() as u64) * 4 + (self.norms.len() as u64) * 8
    }

    /// Writes the binary snapshot; returns bytes written.
    pub fn write_snapshot(&self, path: impl AsRef<Path>) -> Result<u64, IndexError> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|source| IndexError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut w = SnapshotWriter::new(BufWriter::new(file), path);
        w.write_magic(MAGIC)?;
        w.write_u32(VERSION)?;
        w.write_u32(self.dim as u32)?;
        w.write_u64(self.len() as u64)?;
        for id in &self.doc_ids {
            w.write_string(id)?;
        }
        w.write_f32s(&self.vectors)?;
        w.finish()
    }

    /// Loads a snapshot and re-validates every build invariant, so a corrupt
    /// file can never produce an index a fresh build could not.
    pub fn read_snapshot(path: impl AsRef<Path>) -> Result<Self, IndexError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| IndexError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut r = SnapshotReader::new(BufReader::new(file), path);
        r.expect_magic(MAGIC)?;
        r.read_version()?;
        let dim = r.read_dim()?;
        let count = r.read_count()?;
        let mut ids = Vec::with_capacity(count);
        for _ in 0..count {
            ids.push(r.read_string()?);
        }
        let mut pairs = Vec::with_capacity(count);
        for id in ids {
            let values = r.read_f32s(dim)?;
            let emb = DenseEmbedding::new(values).map_err(|e| r.corrupt(e.to_string()))?;
            pairs.push((id, emb));
        }
        let built = DenseIndex::build(pairs).map_err(|e| IndexError::Corrupt {
            path: path.to_path_buf(),
            message: e.to_string(),
        });
        r.expect_eof()?;
        built
    }
}
