//! Property tests for corpus persistence and segmentation: save/load is an
//! identity, loaded files validate clean, and level segmentation is a true
//! partition.

use std::collections::BTreeMap;

use proptest::prelude::*;
use ragmark::corpus::{
    collect_findings, load_corpus, save_corpus, segment_by_level, Corpus, DocumentRecord, QAPair,
};

/// Arbitrary Unicode, including controls, quotes, and backslashes, to push
/// the record format's string escaping.
fn unicode_text() -> impl Strategy<Value = String> {
    prop::collection::vec(any::<char>(), 0..12).prop_map(String::from_iter)
}

/// Unicode text guaranteed to survive `str::trim`, the emptiness check
/// applied to questions, answers, chunks, and channel text.
fn nonblank_text() -> impl Strategy<Value = String> {
    let anchor = any::<char>().prop_filter("non-whitespace", |c| !c.is_whitespace());
    (unicode_text(), anchor, unicode_text()).prop_map(|(a, c, b)| format!("{a}{c}{b}"))
}

fn channel_name() -> impl Strategy<Value = String> {
    "[a-z][a-z_]{0,9}"
}

#[allow(clippy::type_complexity)]
fn doc_body() -> impl Strategy<
    Value = (
        u8,
        BTreeMap<String, String>,
        Option<Vec<String>>,
        Option<Vec<String>>,
    ),
> {
    (
        0u8..=3,
        prop::collection::btree_map(channel_name(), nonblank_text(), 1..3),
        prop::option::of(prop::collection::vec(nonblank_text(), 1..4)),
        prop::option::of(prop::collection::vec("[a-z-]{1,12}", 0..3)),
    )
}

fn corpus_strategy() -> impl Strategy<Value = Corpus> {
    let docs = prop::collection::btree_map("[a-zA-Z0-9_.:-]{1,12}", doc_body(), 1..6).prop_map(
        |by_id| {
            by_id
                .into_iter()
                .map(|(doc_id, (level, channels, chunks, features))| DocumentRecord {
                    doc_id,
                    level,
                    channels,
                    chunks,
                    features,
                })
                .collect::<Vec<_>>()
        },
    );
    docs.prop_flat_map(|docs| {
        let n = docs.len();
        let ids: Vec<String> = docs.iter().map(|d| d.doc_id.clone()).collect();
        let pairs =
            prop::collection::vec((0..n, nonblank_text(), nonblank_text()), 0..6).prop_map(
                move |specs| {
                    specs
                        .into_iter()
                        .map(|(i, question, reference_answer)| QAPair {
                            doc_id: ids[i].clone(),
                            question,
                            reference_answer,
                        })
                        .collect::<Vec<_>>()
                },
            );
        (Just(docs), pairs).prop_map(|(docs, pairs)| {
            Corpus::new(docs, pairs).expect("strategy yields valid corpora")
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn save_then_load_is_identity(corpus in corpus_strategy()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        save_corpus(&corpus, &path).unwrap();
        let reloaded = load_corpus(&path).unwrap();
        prop_assert_eq!(reloaded, corpus);
    }

    #[test]
    fn saved_corpora_validate_clean(corpus in corpus_strategy()) {
        // The strategy only builds corpora without data smells (every doc
        // has at least one channel, all text non-blank), so the lenient
        // full-file scan must agree with the strict loader: no findings.
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        save_corpus(&corpus, &path).unwrap();
        let findings = collect_findings(&path).unwrap();
        prop_assert!(findings.is_empty(), "unexpected findings: {findings:?}");
    }

    #[test]
    fn segmentation_is_a_partition(corpus in corpus_strategy()) {
        let buckets = segment_by_level(&corpus);

        let doc_total: usize = buckets.values().map(|b| b.documents.len()).sum();
        prop_assert_eq!(doc_total, corpus.documents().len());
        let pair_total: usize = buckets.values().map(|b| b.qa_pairs.len()).sum();
        prop_assert_eq!(pair_total, corpus.qa_pairs().len());

        for (&level, bucket) in &buckets {
            for doc in &bucket.documents {
                prop_assert_eq!(doc.level, level);
            }
            // Pairs land in the bucket of their gold document's level.
            for pair in &bucket.qa_pairs {
                prop_assert_eq!(corpus.level_of(&pair.doc_id), Some(level));
            }
        }

        // No document in two buckets, none dropped.
        let mut seen: Vec<&str> = buckets
            .values()
            .flat_map(|b| b.documents.iter().map(|d| d.doc_id.as_str()))
            .collect();
        seen.sort_unstable();
        let mut expected: Vec<&str> = corpus
            .documents()
            .iter()
            .map(|d| d.doc_id.as_str())
            .collect();
        expected.sort_unstable();
        prop_assert_eq!(seen, expected);

        // Only levels that actually occur appear as keys.
        for &level in buckets.keys() {
            prop_assert!(corpus.documents().iter().any(|d| d.level == level));
        }
    }
}
