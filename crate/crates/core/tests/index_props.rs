//! Property tests for the two index families: cosine range bounds, scale
//! invariance of rankings, oracle agreement with a full sort, MaxSim
//! dominance/monotonicity, single-vector degeneracy, and snapshot fidelity.

use proptest::prelude::*;
use ragmark::embed::{DenseEmbedding, MultiVectorEmbedding};
use ragmark::index::{cosine_score, maxsim_score, DenseIndex, LateIndex};

/// Coordinates are dyadic rationals (multiples of 0.25 within ±4), so every
/// value and every power-of-two multiple of it is exact in f32 and f64. The
/// leading coordinate is nonzero, keeping norms positive.
fn dyadic_vector(dim: usize) -> impl Strategy<Value = Vec<f32>> {
    let head = (1i32..=16, any::<bool>()).prop_map(|(m, neg)| if neg { -m } else { m });
    let tail = prop::collection::vec(-16i32..=16, dim - 1);
    (head, tail).prop_map(|(h, t)| {
        std::iter::once(h)
            .chain(t)
            .map(|i| i as f32 * 0.25)
            .collect()
    })
}

fn doc_id() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-z0-9_.-]{1,10}",
        // Snapshots store ids length-prefixed as raw bytes; exercise
        // multi-byte characters.
        "[\\p{Greek}\\p{Cyrillic}]{1,6}",
    ]
}

fn embedding(values: Vec<f32>) -> DenseEmbedding {
    DenseEmbedding::new(values).expect("strategy vectors are nonzero")
}

/// Documents (unique ids), a few queries, and a cutoff that may exceed the
/// document count.
type DenseInstance = (Vec<(String, Vec<f32>)>, Vec<Vec<f32>>, usize);

fn dense_instance() -> impl Strategy<Value = DenseInstance> {
    (1usize..=6).prop_flat_map(|dim| {
        (
            prop::collection::btree_map(doc_id(), dyadic_vector(dim), 1..12)
                .prop_map(|m| m.into_iter().collect::<Vec<_>>()),
            prop::collection::vec(dyadic_vector(dim), 1..3),
            1usize..=14,
        )
    })
}

type LateInstance = (Vec<(String, Vec<Vec<f32>>)>, Vec<Vec<f32>>, usize);

fn late_instance() -> impl Strategy<Value = LateInstance> {
    (1usize..=5).prop_flat_map(|dim| {
        (
            prop::collection::btree_map(
                doc_id(),
                prop::collection::vec(dyadic_vector(dim), 1..4),
                1..10,
            )
            .prop_map(|m| m.into_iter().collect::<Vec<_>>()),
            prop::collection::vec(dyadic_vector(dim), 1..3),
            1usize..=12,
        )
    })
}

fn build_dense(docs: &[(String, Vec<f32>)]) -> DenseIndex {
    DenseIndex::build(
        docs.iter()
            .map(|(id, v)| (id.clone(), embedding(v.clone())))
            .collect(),
    )
    .unwrap()
}

fn build_late(docs: &[(String, Vec<Vec<f32>>)]) -> LateIndex {
    LateIndex::build(
        docs.iter()
            .map(|(id, group)| {
                let vectors = group.iter().map(|v| embedding(v.clone())).collect();
                (id.clone(), MultiVectorEmbedding::new(vectors).unwrap())
            })
            .collect(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// Cosine is scale-free, and for power-of-two scales the float
    /// arithmetic is exact, so the ranked list must be bitwise identical.
    #[test]
    fn dense_ranking_is_scale_invariant((docs, queries, k) in dense_instance()) {
        let index = build_dense(&docs);
        for q in &queries {
            let base = index.query(&embedding(q.clone()), k).unwrap();
            for scale in [0.25f32, 0.5, 2.0, 8.0] {
                let scaled: Vec<f32> = q.iter().map(|x| x * scale).collect();
                let got = index.query(&embedding(scaled), k).unwrap();
                prop_assert_eq!(&got.hits, &base.hits, "scale {}", scale);
            }
        }
    }

    /// Full-depth querying is just a descending sort of every pairwise
    /// cosine, ties broken by ascending doc id.
    #[test]
    fn dense_full_depth_ranking_matches_descending_cosine_sort(
        (docs, queries, _) in dense_instance(),
    ) {
        let index = build_dense(&docs);
        for q in &queries {
            let q_emb = embedding(q.clone());
            let mut oracle: Vec<(String, f64)> = docs
                .iter()
                .map(|(id, v)| {
                    let score = cosine_score(&q_emb, &embedding(v.clone())).unwrap();
                    (id.clone(), score)
                })
                .collect();
            oracle.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

            let got = index.query(&q_emb, docs.len()).unwrap();
            prop_assert_eq!(got.hits.len(), oracle.len());
            for (hit, (id, score)) in got.hits.iter().zip(&oracle) {
                prop_assert_eq!(&hit.doc_id, id);
                prop_assert_eq!(hit.score, *score);
            }
        }
    }

    #[test]
    fn all_scores_lie_in_the_cosine_range(
        (docs, queries, k) in dense_instance(),
        (late_docs, late_queries, late_k) in late_instance(),
    ) {
        let dense = build_dense(&docs);
        for q in &queries {
            for hit in dense.query(&embedding(q.clone()), k).unwrap().hits {
                prop_assert!(hit.score.abs() <= 1.0 + 1e-6, "{}", hit.score);
            }
        }
        let late = build_late(&late_docs);
        for q in &late_queries {
            for hit in late.query(&embedding(q.clone()), late_k).unwrap().hits {
                prop_assert!(hit.score.abs() <= 1.0 + 1e-6, "{}", hit.score);
            }
        }
    }

    /// MaxSim is the max over member cosines: it dominates every member,
    /// never decreases when a vector joins the group, and ignores order.
    #[test]
    fn maxsim_dominates_members_and_is_monotone(
        (group, extra, q) in (1usize..=5).prop_flat_map(|dim| {
            (
                prop::collection::vec(dyadic_vector(dim), 1..5),
                dyadic_vector(dim),
                dyadic_vector(dim),
            )
        }),
        shuffle in any::<prop::sample::Index>(),
    ) {
        let q = embedding(q);
        let doc = MultiVectorEmbedding::new(group.iter().cloned().map(embedding).collect()).unwrap();
        let score = maxsim_score(&q, &doc).unwrap();

        for member in &group {
            let member_score = cosine_score(&q, &embedding(member.clone())).unwrap();
            prop_assert!(score >= member_score, "{score} < member {member_score}");
        }

        let mut grown = group.clone();
        grown.push(extra);
        let grown_doc =
            MultiVectorEmbedding::new(grown.iter().cloned().map(embedding).collect()).unwrap();
        let grown_score = maxsim_score(&q, &grown_doc).unwrap();
        prop_assert!(grown_score >= score, "adding a vector lowered {score} to {grown_score}");

        // Rotation by an arbitrary offset is permutation enough: max over a
        // multiset has no order to exploit.
        let mut rotated = group.clone();
        rotated.rotate_left(shuffle.index(group.len()));
        let rotated_doc =
            MultiVectorEmbedding::new(rotated.into_iter().map(embedding).collect()).unwrap();
        prop_assert_eq!(maxsim_score(&q, &rotated_doc).unwrap(), score);
    }

    /// With one vector per document the two paradigms must coincide exactly,
    /// scores included.
    #[test]
    fn single_vector_late_index_equals_dense_index((docs, queries, k) in dense_instance()) {
        let dense = build_dense(&docs);
        let late_docs: Vec<(String, Vec<Vec<f32>>)> = docs
            .iter()
            .map(|(id, v)| (id.clone(), vec![v.clone()]))
            .collect();
        let late = build_late(&late_docs);
        for q in &queries {
            let d = dense.query(&embedding(q.clone()), k).unwrap();
            let l = late.query(&embedding(q.clone()), k).unwrap();
            prop_assert_eq!(d.hits, l.hits);
        }
    }
}

proptest! {
    // Disk round-trips per case: keep the case count moderate.
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn dense_snapshot_roundtrip_preserves_rankings((docs, queries, k) in dense_instance()) {
        let index = build_dense(&docs);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dense.snap");
        let written = index.write_snapshot(&path).unwrap();
        prop_assert_eq!(written, index.snapshot_bytes());
        prop_assert_eq!(written, std::fs::metadata(&path).unwrap().len());

        let restored = DenseIndex::read_snapshot(&path).unwrap();
        prop_assert_eq!(restored.doc_ids(), index.doc_ids());
        for q in &queries {
            let q = embedding(q.clone());
            prop_assert_eq!(restored.query(&q, k).unwrap(), index.query(&q, k).unwrap());
        }
    }

    #[test]
    fn late_snapshot_roundtrip_preserves_rankings((docs, queries, k) in late_instance()) {
        let index = build_late(&docs);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("late.snap");
        let written = index.write_snapshot(&path).unwrap();
        prop_assert_eq!(written, index.snapshot_bytes());
        prop_assert_eq!(written, std::fs::metadata(&path).unwrap().len());

        let restored = LateIndex::read_snapshot(&path).unwrap();
        prop_assert_eq!(restored.doc_ids(), index.doc_ids());
        prop_assert_eq!(restored.total_vectors(), index.total_vectors());
        for q in &queries {
            let q = embedding(q.clone());
            prop_assert_eq!(restored.query(&q, k).unwrap(), index.query(&q, k).unwrap());
        }
    }
}
