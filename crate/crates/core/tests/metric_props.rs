//! Property tests for the evaluation metrics: range bounds, aggregation
//! identities, cutoff monotonicity, the binary NDCG closed form, and the
//! token-level invariances of the semantic metrics.

use proptest::prelude::*;
use ragmark::index::{RankedResult, ScoredDoc};
use ragmark::metrics::retrieval::{mrr, ndcg_at_k, recall_at_k, RetrievalJudgment};
use ragmark::metrics::semantic::{
    bleu, exact_match, lcs_len, normalize, rouge_1, rouge_l, AnswerPair,
};

/// A ranked list of `len` results with the gold document at `gold_at`
/// (0-based), or absent entirely.
fn judgment(len: usize, gold_at: Option<usize>) -> RetrievalJudgment {
    let hits = (0..len)
        .map(|i| ScoredDoc {
            doc_id: if gold_at == Some(i) {
                "gold".to_string()
            } else {
                format!("d{i}")
            },
            score: 1.0 - i as f64 * 0.01,
        })
        .collect();
    RetrievalJudgment {
        query_id: "q".to_string(),
        gold_doc_id: "gold".to_string(),
        ranked: RankedResult {
            query_id: "q".to_string(),
            hits,
        },
    }
}

fn judgment_strategy() -> impl Strategy<Value = RetrievalJudgment> {
    (1usize..=12)
        .prop_flat_map(|len| (Just(len), prop::option::of(0..len)))
        .prop_map(|(len, gold_at)| judgment(len, gold_at))
}

fn judgments(max: usize) -> impl Strategy<Value = Vec<RetrievalJudgment>> {
    prop::collection::vec(judgment_strategy(), 1..max)
}

proptest! {
    #[test]
    fn retrieval_metrics_stay_in_unit_interval(js in judgments(40), k in 1usize..15) {
        for value in [
            mrr(&js).unwrap(),
            recall_at_k(&js, k).unwrap(),
            ndcg_at_k(&js, k).unwrap(),
        ] {
            prop_assert!((0.0..=1.0).contains(&value), "{value}");
        }
    }

    /// Concatenating judgment sets averages their metrics weighted by size.
    /// This is what licenses aggregating per-level rows into totals.
    #[test]
    fn metrics_concatenate_as_question_weighted_means(
        a in judgments(30),
        b in judgments(30),
        k in 1usize..10,
    ) {
        let joint: Vec<RetrievalJudgment> = a.iter().cloned().chain(b.iter().cloned()).collect();
        let n_a = a.len() as f64;
        let n_b = b.len() as f64;
        let cases = [
            (mrr(&a).unwrap(), mrr(&b).unwrap(), mrr(&joint).unwrap()),
            (
                recall_at_k(&a, k).unwrap(),
                recall_at_k(&b, k).unwrap(),
                recall_at_k(&joint, k).unwrap(),
            ),
            (
                ndcg_at_k(&a, k).unwrap(),
                ndcg_at_k(&b, k).unwrap(),
                ndcg_at_k(&joint, k).unwrap(),
            ),
        ];
        for (part_a, part_b, whole) in cases {
            let weighted = (part_a * n_a + part_b * n_b) / (n_a + n_b);
            prop_assert!((whole - weighted).abs() < 1e-12, "{whole} vs {weighted}");
        }
    }

    /// Widening the cutoff can only admit more gold documents.
    #[test]
    fn recall_and_ndcg_are_monotone_in_k(js in judgments(30), k in 1usize..12, extra in 1usize..6) {
        prop_assert!(recall_at_k(&js, k).unwrap() <= recall_at_k(&js, k + extra).unwrap());
        prop_assert!(ndcg_at_k(&js, k).unwrap() <= ndcg_at_k(&js, k + extra).unwrap());
    }

    /// Single gold document: the graded NDCG machinery must reduce to the
    /// binary closed form 1/log2(rank+1), bit for bit.
    #[test]
    fn binary_ndcg_equals_the_closed_form(
        (len, gold_at) in (1usize..=12).prop_flat_map(|len| (Just(len), 0..len)),
        k in 1usize..=12,
    ) {
        let j = judgment(len, Some(gold_at));
        let rank = gold_at + 1;
        let expected = if rank <= k {
            1.0 / ((rank + 1) as f64).log2()
        } else {
            0.0
        };
        prop_assert_eq!(ndcg_at_k(&[j], k).unwrap(), expected);
    }
}

/// Space-separated lowercase alphanumeric words: already in normal form, so
/// token-level reasoning applies directly.
fn word_text() -> impl Strategy<Value = String> {
    prop::collection::vec("[a-z0-9]{1,6}", 1..8).prop_map(|ws| ws.join(" "))
}

/// Tokens over a tiny alphabet, for collision-heavy LCS and clipping cases.
fn collision_tokens() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec("[ab]{1,2}", 0..8)
}

fn pair(generated: &str, reference: &str) -> AnswerPair {
    AnswerPair {
        query_id: "q".to_string(),
        generated: generated.to_string(),
        reference: reference.to_string(),
    }
}

proptest! {
    #[test]
    fn identical_texts_score_one_on_every_metric(text in word_text()) {
        let p = pair(&text, &text);
        prop_assert_eq!(exact_match(std::slice::from_ref(&p)).unwrap(), 1.0);
        prop_assert_eq!(bleu(&p).unwrap(), 1.0);
        prop_assert_eq!(rouge_1(&p).unwrap(), 1.0);
        prop_assert_eq!(rouge_l(&p).unwrap(), 1.0);
    }

    #[test]
    fn semantic_metrics_stay_in_unit_interval(
        generated in prop::collection::vec(any::<char>(), 0..30).prop_map(String::from_iter),
        reference in word_text(),
    ) {
        let p = pair(&generated, &reference);
        for value in [
            exact_match(std::slice::from_ref(&p)).unwrap(),
            bleu(&p).unwrap(),
            rouge_1(&p).unwrap(),
            rouge_l(&p).unwrap(),
        ] {
            prop_assert!((0.0..=1.0).contains(&value), "{value}");
        }
    }

    /// ROUGE-1 counts a bag of unigrams; candidate order is irrelevant.
    #[test]
    fn rouge_1_ignores_candidate_order(
        tokens in prop::collection::vec("[a-d]{1,2}", 1..8),
        reference in word_text(),
        rotation in any::<prop::sample::Index>(),
    ) {
        let straight = tokens.join(" ");
        let mut rotated = tokens.clone();
        rotated.rotate_left(rotation.index(tokens.len()));
        let rotated = rotated.join(" ");
        prop_assert_eq!(
            rouge_1(&pair(&straight, &reference)).unwrap(),
            rouge_1(&pair(&rotated, &reference)).unwrap(),
        );
    }

    /// LCS facts: symmetric, bounded by both lengths, and never longer than
    /// the clipped unigram overlap (a common subsequence is in particular a
    /// common multiset). ROUGE-L is exactly its length-normalized form.
    #[test]
    fn lcs_respects_overlap_bounds(a in collision_tokens(), b in collision_tokens()) {
        let lcs = lcs_len(&a, &b);
        prop_assert_eq!(lcs, lcs_len(&b, &a));
        prop_assert!(lcs <= a.len().min(b.len()));

        let clipped: usize = {
            let mut counts = std::collections::HashMap::new();
            for t in &b {
                *counts.entry(t.clone()).or_insert(0usize) += 1;
            }
            let mut matched = 0;
            for t in &a {
                if let Some(c) = counts.get_mut(t) {
                    if *c > 0 {
                        *c -= 1;
                        matched += 1;
                    }
                }
            }
            matched
        };
        prop_assert!(lcs <= clipped, "lcs {lcs} exceeds unigram overlap {clipped}");

        if !a.is_empty() && !b.is_empty() {
            let p = pair(&a.join(" "), &b.join(" "));
            let expected = 2.0 * lcs as f64 / (a.len() + b.len()) as f64;
            prop_assert!((rouge_l(&p).unwrap() - expected).abs() < 1e-12);
        }
    }

    /// The pinned normalization makes matching case- and punctuation-blind.
    #[test]
    fn exact_match_ignores_case_and_punctuation(
        words in prop::collection::vec("[a-z0-9]{1,6}", 1..8),
    ) {
        let reference = words.join(" ");
        let decorated = format!("  {}!!!", words.join(", ").to_uppercase());
        let (norm_decorated, norm_reference) = (normalize(&decorated), normalize(&reference));
        prop_assert_eq!(norm_decorated.tokens(), norm_reference.tokens());
        let p = pair(&decorated, &reference);
        prop_assert_eq!(exact_match(std::slice::from_ref(&p)).unwrap(), 1.0);
    }
}
