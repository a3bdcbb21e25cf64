//! Ranking metrics over single-gold judgments: MRR, Recall@k, NDCG@k.
//!
//! Every question has exactly one relevant document. A gold document missing
//! from the ranked list scores 0 (the standard convention for misses). NDCG
//! is implemented for general graded relevance with gains (2^rel - 1) and
//! log2 position discounts; the evaluated binary path feeds it 0/1 labels,
//! where it reduces to 1/log2(r+1) for gold rank r within the cutoff.

use serde::{Deserialize, Serialize};

use crate::index::RankedResult;

use super::MetricError;

/// One scored query: which document should have been retrieved, and what the
/// index actually returned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalJudgment {
    pub query_id: String,
    pub gold_doc_id: String,
    pub ranked: RankedResult,
}

impl RetrievalJudgment {
    /// 1-based rank of the gold document, if retrieved.
    pub fn gold_rank(&self) -> Option<usize> {
        self.ranked.rank_of(&self.gold_doc_id)
    }
}

/// 1/rank of the gold document; 0 when absent from the list.
pub fn reciprocal_rank(j: &RetrievalJudgment) -> f64 {
    match j.gold_rank() {
        Some(r) => 1.0 / r as f64,
        None => 0.0,
    }
}

/// Mean reciprocal rank over a non-empty judgment set.
pub fn mrr(js: &[RetrievalJudgment]) -> Result<f64, MetricError> {
    if js.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    Ok(js.iter().map(reciprocal_rank).sum::<f64>() / js.len() as f64)
}

/// Fraction of judgments whose gold document appears in the top k
/// (boundary-inclusive: rank k counts).
pub fn recall_at_k(js: &[RetrievalJudgment], k: usize) -> Result<f64, MetricError> {
    if k == 0 {
        return Err(MetricError::InvalidK);
    }
    if js.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let hits = js
        .iter()
        .filter(|j| matches!(j.gold_rank(), Some(r) if r <= k))
        .count();
    Ok(hits as f64 / js.len() as f64)
}

/// DCG@k / IDCG@k for one ranked list of graded relevance labels.
///
/// `rels_by_rank` lists the label at each result position (rank order);
/// `relevance_pool` lists every relevant label available to the query, from
/// which the ideal ordering is formed. Gains are (2^rel - 1) discounted by
/// log2(rank + 1). Returns 0 when the pool holds no positive relevance.
pub fn ndcg_graded(rels_by_rank: &[u32], relevance_pool: &[u32], k: usize) -> f64 {
    fn gain(rel: u32) -> f64 {
        2f64.powi(rel as i32) - 1.0
    }
    fn discount(rank: usize) -> f64 {
        ((rank + 1) as f64).log2()
    }
    let dcg: f64 = rels_by_rank
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &rel)| gain(rel) / discount(i + 1))
        .sum();
    let mut ideal = relevance_pool.to_vec();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg: f64 = ideal
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &rel)| gain(rel) / discount(i + 1))
        .sum();
    if idcg == 0.0 {
        0.0
    } else {
        dcg / idcg
    }
}

/// Mean NDCG@k over a non-empty judgment set, binary single-gold relevance
/// fed through the graded path.
pub fn ndcg_at_k(js: &[RetrievalJudgment], k: usize) -> Result<f64, MetricError> {
    if k == 0 {
        return Err(MetricError::InvalidK);
    }
    if js.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let sum: f64 = js
        .iter()
        .map(|j| {
            let rels: Vec<u32> = j
                .ranked
                .hits
                .iter()
                .map(|h| u32::from(h.doc_id == j.gold_doc_id))
                .collect();
            ndcg_graded(&rels, &[1], k)
        })
        .sum();
    Ok(sum / js.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::ScoredDoc;

    /// A judgment whose gold doc sits at `rank` (None = absent) in a list of
    /// `len` results.
    fn judgment(rank: Option<usize>, len: usize) -> RetrievalJudgment {
        let hits = (1..=len)
            .map(|pos| ScoredDoc {
                doc_id: if Some(pos) == rank {
                    "gold".to_string()
                } else {
                    format!("other{pos}")
                },
                score: 1.0 - pos as f64 * 0.01,
            })
            .collect();
        RetrievalJudgment {
            query_id: "q".into(),
            gold_doc_id: "gold".into(),
            ranked: RankedResult {
                query_id: "q".into(),
                hits,
            },
        }
    }

    #[test]
    fn reciprocal_rank_formula() {
        assert_eq!(reciprocal_rank(&judgment(Some(1), 5)), 1.0);
        assert_eq!(reciprocal_rank(&judgment(Some(4), 5)), 0.25);
        assert_eq!(reciprocal_rank(&judgment(None, 5)), 0.0);
    }

    #[test]
    fn mrr_of_known_ranks() {
        let js = vec![judgment(Some(1), 5), judgment(Some(2), 5), judgment(Some(4), 5)];
        let got = mrr(&js).unwrap();
        assert!((got - (1.0 + 0.5 + 0.25) / 3.0).abs() < 1e-9);
    }

    #[test]
    fn mrr_rejects_empty() {
        assert!(matches!(mrr(&[]), Err(MetricError::EmptyInput)));
    }

    #[test]
    fn recall_boundary_is_inclusive() {
        assert_eq!(recall_at_k(&[judgment(Some(5), 10)], 5).unwrap(), 1.0);
        assert_eq!(recall_at_k(&[judgment(Some(6), 10)], 5).unwrap(), 0.0);
    }

    #[test]
    fn recall_counts_fraction() {
        let js = vec![
            judgment(Some(1), 10),
            judgment(Some(6), 10),
            judgment(Some(3), 10),
            judgment(None, 10),
        ];
        assert_eq!(recall_at_k(&js, 5).unwrap(), 0.5);
    }

    #[test]
    fn ndcg_spot_values() {
        assert_eq!(ndcg_at_k(&[judgment(Some(1), 10)], 5).unwrap(), 1.0);
        // rank 3 at k=5: 1/log2(4) = 0.5
        assert_eq!(ndcg_at_k(&[judgment(Some(3), 10)], 5).unwrap(), 0.5);
        assert_eq!(ndcg_at_k(&[judgment(Some(7), 10)], 5).unwrap(), 0.0);
    }

    #[test]
    fn graded_path_handles_multilevel_labels() {
        // Perfect ordering of pool [3,2,1] scores 1; the reverse scores less.
        assert!((ndcg_graded(&[3, 2, 1], &[3, 2, 1], 3) - 1.0).abs() < 1e-12);
        let reversed = ndcg_graded(&[1, 2, 3], &[3, 2, 1], 3);
        assert!(reversed < 1.0 && reversed > 0.0);
    }

    #[test]
    fn empty_pool_scores_zero() {
        assert_eq!(ndcg_graded(&[0, 0], &[], 5), 0.0);
    }
}
