//! Multi-vector index: a group of chunk embeddings per document, ranked by
//! late-interaction scoring. Group size m may vary per document.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use crate::embed::{DenseEmbedding, MultiVectorEmbedding};

use super::snapshot::{SnapshotReader, SnapshotWriter, MAX_GROUP, VERSION};
use super::{dot_f64, top_k, IndexError, RankedResult};

const MAGIC: &[u8; 4] = b"LRIX";

/// Immutable after build; safe for unlimited concurrent queries.
#[derive(Debug, Clone)]
pub struct LateIndex {
    dim: usize,
    doc_ids: Vec<String>,
    /// Row offsets per document; len = count + 1.
    group_offsets: Vec<usize>,
    /// Row-major, len = total_rows * dim.
    vectors: Vec<f32>,
    /// Per row.
    norms: Vec<f64>,
}

impl LateIndex {
    /// Builds from (doc_id, group) pairs. Same contract as the dense build,
    /// applied per group member; groups are non-empty by construction of
    /// [`MultiVectorEmbedding`].
    pub fn build(pairs: Vec<(String, MultiVectorEmbedding)>) -> Result<Self, IndexError> {
        let Some((_, first)) = pairs.first() else {
            return Err(IndexError::Empty);
        };
        let dim = first.dim();
        let mut doc_ids = Vec::with_capacity(pairs.len());
        let mut group_offsets = vec![0usize];
        let mut vectors = Vec::new();
        let mut norms = Vec::new();
        let mut seen = BTreeSet::new();
        for (doc_id, group) in pairs {
            if group.dim() != dim {
                return Err(IndexError::DimMismatch {
                    want: dim,
                    got: group.dim(),
                });
            }
            for v in group.vectors() {
                let norm = v.l2_norm();
                if norm == 0.0 {
                    return Err(IndexError::ZeroVector { doc_id });
                }
                vectors.extend_from_slice(v.values());
                norms.push(norm);
            }
            if !seen.insert(doc_id.clone()) {
                return Err(IndexError::DuplicateDocId { doc_id });
            }
            group_offsets.push(norms.len());
            doc_ids.push(doc_id);
        }
        Ok(LateIndex {
            dim,
            doc_ids,
            group_offsets,
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

    pub fn total_vectors(&self) -> usize {
        self.norms.len()
    }

    fn row(&self, r: usize) -> &[f32] {
        &self.vectors[r * self.dim..(r + 1) * self.dim]
    }

    /// Best cosine between the (already normalized-once) query and any row of
    /// document `i`.
    fn maxsim_rows(&self, q: &[f32], qn: f64, i: usize) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for r in self.group_offsets[i]..self.group_offsets[i + 1] {
            let score = dot_f64(q, self.row(r)) / (qn * self.norms[r]);
            best = best.max(score);
        }
        best
    }

    fn check_query(&self, dim: usize, k: usize) -> Result<(), IndexError> {
        if k == 0 {
            return Err(IndexError::InvalidK);
        }
        if dim != self.dim {
            return Err(IndexError::DimMismatch {
                want: self.dim,
                got: dim,
            });
        }
        if self.doc_ids.is_empty() {
            return Err(IndexError::Empty);
        }
        Ok(())
    }

    /// Exact top-k by MaxSim (single query vector, max over the group), ties
    /// broken by ascending doc_id.
    pub fn query(&self, q: &DenseEmbedding, k: usize) -> Result<RankedResult, IndexError> {
        self.check_query(q.dim(), k)?;
        let qn = q.l2_norm();
        if qn == 0.0 {
            return Err(IndexError::ZeroNorm);
        }
        let hits = top_k(
            (0..self.len()).map(|i| {
                (
                    self.doc_ids[i].as_str(),
                    self.maxsim_rows(q.values(), qn, i),
                )
            }),
            k,
        );
        Ok(RankedResult {
            query_id: String::new(),
            hits,
        })
    }

    /// Exact top-k by full late interaction: per document, the sum over query
    /// vectors of the best per-group cosine.
    pub fn query_multi(
        &self,
        q: &MultiVectorEmbedding,
        k: usize,
    ) -> Result<RankedResult, IndexError> {
        self.check_query(q.dim(), k)?;
        let mut qnorms = Vec::with_capacity(q.m());
        for qv in q.vectors() {
            let qn = qv.l2_norm();
            if qn == 0.0 {
                return Err(IndexError::ZeroNorm);
            }
            qnorms.push(qn);
        }
        let hits = top_k(
            (0..self.len()).map(|i| {
                let mut total = 0.0;
                for (qv, &qn) in q.vectors().iter().zip(&qnorms) {
                    total += self.maxsim_rows(qv.values(), qn, i);
                }
                (self.doc_ids[i].as_str(), total)
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
        let group_table = (self.doc_ids.len() as u64) * 4;
        header + ids + group_table + (self.vectors.len() as u64) * 4
    }

    pub fn in_memory_bytes(&self) -> u64 {
        let ids: u64 = self
            .doc_ids
            .iter()
            .map(|id| (id.len() + std::mem::size_of::<String>()) as u64)
            .sum();
        ids + (self.vectors.len() as u64) * 4
            + (self.norms.len() as u64) * 8
            + (self.group_offsets.len() as u64) * (std::mem::size_of::<usize>() as u64)
    }

    /// Writes the binary snapshot; returns bytes written. Same layout as the
    /// dense format plus a per-document group-length table.
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
        for i in 0..self.len() {
            let m = self.group_offsets[i + 1] - self.group_offsets[i];
            w.write_u32(m as u32)?;
        }
        w.write_f32s(&self.vectors)?;
        w.finish()
    }

    /// Loads a snapshot, re-validating every build invariant.
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
        let mut group_lens = Vec::with_capacity(count);
        for _ in 0..count {
            let m = r.read_u32()?;
            if m == 0 || m > MAX_GROUP {
                return Err(r.corrupt(format!("implausible group length {m}")));
            }
            group_lens.push(m as usize);
        }
        let mut pairs = Vec::with_capacity(count);
        for (id, m) in ids.into_iter().zip(group_lens) {
            let mut group = Vec::with_capacity(m);
            for _ in 0..m {
                let values = r.read_f32s(dim)?;
                group.push(DenseEmbedding::new(values).map_err(|e| r.corrupt(e.to_string()))?);
            }
            let mv = MultiVectorEmbedding::new(group).map_err(|e| r.corrupt(e.to_string()))?;
            pairs.push((id, mv));
        }
        let built = LateIndex::build(pairs).map_err(|e| IndexError::Corrupt {
            path: path.to_path_buf(),
            message: e.to_string(),
        });
        r.expect_eof()?;
        built
    }
}
