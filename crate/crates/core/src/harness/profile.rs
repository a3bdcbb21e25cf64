//! Efficiency measurement for one arm: wall-clock cost of embedding and
//! retrieval, plus index footprint.
//!
//! Profiling is a dedicated sequential pass, separate from the evaluation
//! run, so its timings are not polluted by worker contention. Documents are
//! re-embedded one at a time under a call counter, the index is rebuilt from
//! those embeddings (untimed), and every question is then timed through
//! query embedding and search separately. Remote providers are billed for
//! this pass like any other.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::corpus::{load_corpus, Corpus, CorpusError};
use crate::embed::CountingEmbedder;
use crate::error::Result;

use super::config::ExperimentConfig;
use super::runner::{find_arm, ArmRuntime};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyStats {
    pub docs: usize,
    pub queries: usize,
    /// Embedding-provider calls made during this measurement (documents plus
    /// queries; chunking arms make one call per chunk).
    pub embed_calls: u64,
    pub embedding_time_per_doc_s: f64,
    pub embedding_time_stddev_s: f64,
    pub query_embedding_time_per_query_s: f64,
    pub retrieval_latency_per_query_s: f64,
    pub retrieval_latency_stddev_s: f64,
    /// Query embedding plus search, per query.
    pub end_to_end_latency_per_query_s: f64,
    /// Exact size of the serialized index.
    pub snapshot_bytes: u64,
    /// Vectors, norms, ids, and offsets resident while serving.
    pub in_memory_bytes: u64,
    /// Snapshot size scaled to a thousand documents, the figure used for
    /// cross-arm memory comparison.
    pub memory_per_1k_docs_bytes: f64,
    /// Upstream page-decode cost carried in from the arm config for channels
    /// produced by an OCR pass; not measured here.
    pub ocr_time_per_doc_s: Option<f64>,
}

/// Mean and population standard deviation. Callers guarantee non-empty input.
fn mean_stddev(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let variance = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, variance.sqrt())
}

/// Seconds elapsed, floored at one nanosecond so downstream ratios stay
/// finite on very fast operations.
fn elapsed_s(since: Instant) -> f64 {
    since.elapsed().as_secs_f64().max(1e-9)
}

pub(crate) fn profile_arm(
    arm: &ArmRuntime,
    corpus: &Corpus,
    k: usize,
) -> Result<EfficiencyStats> {
    if corpus.qa_pairs().is_empty() {
        return Err(CorpusError::NoQuestions.into());
    }
    let doc_provider = CountingEmbedder::new(&*arm.doc_provider);
    let query_provider = CountingEmbedder::new(&*arm.query_provider);

    let docs = corpus.documents().len();
    let mut ids = Vec::with_capacity(docs);
    let mut embeddings = Vec::with_capacity(docs);
    let mut doc_times = Vec::with_capacity(docs);
    for doc in corpus.documents() {
        let t = Instant::now();
        let e = arm.embed_doc_with(&doc_provider, doc)?;
        doc_times.push(elapsed_s(t));
        ids.push(doc.doc_id.clone());
        embeddings.push(e);
    }
    let index = arm.build_index_from(ids, embeddings)?;

    let mut query_embed_times = Vec::with_capacity(corpus.qa_pairs().len());
    let mut search_times = Vec::with_capacity(corpus.qa_pairs().len());
    for pair in corpus.qa_pairs() {
        let t = Instant::now();
        let q = arm.embed_question_with(&query_provider, &pair.question)?;
        query_embed_times.push(elapsed_s(t));
        let t = Instant::now();
        index.search(&q, k)?;
        search_times.push(elapsed_s(t));
    }

    let (embed_mean, embed_stddev) = mean_stddev(&doc_times);
    let (query_embed_mean, _) = mean_stddev(&query_embed_times);
    let (search_mean, search_stddev) = mean_stddev(&search_times);
    let snapshot_bytes = index.snapshot_bytes();
    Ok(EfficiencyStats {
        docs,
        queries: corpus.qa_pairs().len(),
        embed_calls: doc_provider.calls() + query_provider.calls(),
        embedding_time_per_doc_s: embed_mean,
        embedding_time_stddev_s: embed_stddev,
        query_embedding_time_per_query_s: query_embed_mean,
        retrieval_latency_per_query_s: search_mean,
        retrieval_latency_stddev_s: search_stddev,
        end_to_end_latency_per_query_s: query_embed_mean + search_mean,
        snapshot_bytes,
        in_memory_bytes: index.in_memory_bytes(),
        memory_per_1k_docs_bytes: snapshot_bytes as f64 * 1000.0 / docs as f64,
        ocr_time_per_doc_s: arm.config.ocr_time_per_doc_s,
    })
}

/// Loads the corpus and measures one arm from a plain config.
pub fn profile_efficiency(config: &ExperimentConfig, arm_name: &str) -> Result<EfficiencyStats> {
    config.validate()?;
    let arm = ArmRuntime::from_config(find_arm(config, arm_name)?)?;
    let corpus = load_corpus(&config.corpus)?;
    profile_arm(&arm, &corpus, config.k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{DocumentRecord, QAPair};
    use crate::harness::config::ArmConfig;
    use std::collections::BTreeMap;

    fn corpus(chunks: bool) -> Corpus {
        let texts = ["red orange yellow", "green blue indigo", "violet black white"];
        let docs: Vec<DocumentRecord> = texts
            .iter()
            .enumerate()
            .map(|(i, text)| DocumentRecord {
                doc_id: format!("d{i}"),
                level: 0,
                channels: BTreeMap::from([("native".to_string(), text.to_string())]),
                chunks: chunks
                    .then(|| text.split_whitespace().map(str::to_string).collect()),
                features: None,
            })
            .collect();
        let pairs = vec![
            QAPair {
                doc_id: "d0".to_string(),
                question: "red orange yellow".to_string(),
                reference_answer: "red".to_string(),
            },
            QAPair {
                doc_id: "d2".to_string(),
                question: "violet black white".to_string(),
                reference_answer: "violet".to_string(),
            },
        ];
        Corpus::new(docs, pairs).unwrap()
    }

    fn arm(toml_text: &str) -> ArmRuntime {
        let config: ArmConfig = toml::from_str(toml_text).unwrap();
        ArmRuntime::from_config(&config).unwrap()
    }

    const DENSE_ARM: &str = r#"
name = "dense"
index = "dense"
channel = "native"

[doc_embedder]
kind = "deterministic"
dim = 16

[query_embedder]
kind = "deterministic"
dim = 16
"#;

    #[test]
    fn dense_arm_counts_and_footprint() {
        let stats = profile_arm(&arm(DENSE_ARM), &corpus(false), 2).unwrap();
        assert_eq!(stats.docs, 3);
        assert_eq!(stats.queries, 2);
        // One call per doc plus one per query.
        assert_eq!(stats.embed_calls, 5);
        assert!(stats.embedding_time_per_doc_s > 0.0);
        assert!(stats.retrieval_latency_per_query_s > 0.0);
        assert!(
            stats.end_to_end_latency_per_query_s
                >= stats.retrieval_latency_per_query_s
        );
        assert!(stats.snapshot_bytes > 0);
        assert!(stats.in_memory_bytes >= stats.snapshot_bytes);
        let want = stats.snapshot_bytes as f64 * 1000.0 / 3.0;
        assert_eq!(stats.memory_per_1k_docs_bytes, want);
        assert_eq!(stats.ocr_time_per_doc_s, None);
    }

    #[test]
    fn chunking_arm_makes_one_call_per_chunk() {
        let text = r#"
name = "late"
index = "late"
channel = "native"
chunking = true
ocr_time_per_doc_s = 1.25

[doc_embedder]
kind = "deterministic"
dim = 16

[query_embedder]
kind = "deterministic"
dim = 16
"#;
        let stats = profile_arm(&arm(text), &corpus(true), 2).unwrap();
        // Three docs of three chunks each, plus two queries.
        assert_eq!(stats.embed_calls, 9 + 2);
        assert_eq!(stats.ocr_time_per_doc_s, Some(1.25));
    }

    #[test]
    fn no_questions_is_a_data_error() {
        let docs = corpus(false).documents().to_vec();
        let empty = Corpus::new(docs, vec![]).unwrap();
        let err = profile_arm(&arm(DENSE_ARM), &empty, 2).unwrap_err();
        assert_eq!(err.class(), crate::error::ErrorClass::Data);
    }

    #[test]
    fn mean_stddev_matches_hand_values() {
        let (mean, stddev) = mean_stddev(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(mean, 2.5);
        assert!((stddev - 1.25f64.sqrt()).abs() < 1e-12);
    }
}
