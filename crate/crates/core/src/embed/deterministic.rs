//! Offline test embedder: character n-grams (n = 1..3) hashed into d buckets,
//! counts accumulated, then L2-normalized. Cheap, collision-spreading, and
//! pure (equal inputs give bitwise-equal vectors on every platform), with
//! enough lexical signal that verbatim text is its own nearest neighbor.

use crate::fnv::fnv1a64;

use super::{DenseEmbedding, EmbedError, EmbeddingProvider};

#[derive(Debug, Clone)]
pub struct DeterministicEmbedder {
    dim: usize,
}

impl DeterministicEmbedder {
    pub fn new(dim: usize) -> Result<Self, EmbedError> {
        if dim == 0 {
            return Err(EmbedError::ZeroDim);
        }
        Ok(DeterministicEmbedder { dim })
    }
}

fn hash_window(window: &[char]) -> u64 {
    // n <= 3 chars, 4 bytes each.
    let mut bytes = [0u8; 12];
    let mut len = 0;
    for &c in window {
        bytes[len..len + 4].copy_from_slice(&(c as u32).to_le_bytes());
        len += 4;
    }
    fnv1a64(&bytes[..len])
}

impl EmbeddingProvider for DeterministicEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<DenseEmbedding, EmbedError> {
        if text.is_empty() {
            return Err(EmbedError::EmptyText);
        }
        let chars: Vec<char> = text.chars().collect();
        // Counts stay exact in f64 far beyond any realistic document size.
        let mut counts = vec![0f64; self.dim];
        for n in 1..=3usize.min(chars.len()) {
            for window in chars.windows(n) {
                let bucket = (hash_window(window) % self.dim as u64) as usize;
                counts[bucket] += 1.0;
            }
        }
        let norm = counts.iter().map(|c| c * c).sum::<f64>().sqrt();
        let values = counts.iter().map(|c| (c / norm) as f32).collect();
        DenseEmbedding::new(values)
    }
}
