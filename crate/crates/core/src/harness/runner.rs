//! Drives an experiment end to end: per arm, build (or reload) an index over
//! the corpus, retrieve for every question, optionally generate and score
//! answers, then aggregate per degradation level and write artifacts.
//!
//! Stage boundaries are strict: retrieval outcomes are computed and recorded
//! before generation is consulted for a query, and a failure in any stage
//! checkpoints everything already finished. Reruns of an identical config
//! over an unchanged corpus resume instead of recomputing; a changed config
//! invalidates the checkpoint by fingerprint.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Instant, SystemTime};

use rayon::prelude::*;

use crate::corpus::{load_corpus, qa_query_id, Corpus, CorpusError, DocumentRecord, QAPair};
use crate::embed::{
    embed_chunks, embed_query, embed_text, DenseEmbedding, EmbeddingProvider,
    MultiVectorEmbedding,
};
use crate::error::{Error, Result};
use crate::index::{DenseIndex, IndexError, LateIndex, RankedResult};
use crate::metrics::retrieval::{mrr, ndcg_at_k, recall_at_k, RetrievalJudgment};
use crate::metrics::semantic::{semantic_report, AnswerPair};
use crate::qa_gen::{
    generate_answer, generate_qa_pairs, AnswerOptions, GenerationProvider, PromptTemplates,
    QaGenOptions,
};

use super::checkpoint::{Checkpoint, QueryOutcome};
use super::config::{ArmConfig, ConfigError, ExperimentConfig, IndexKind, LateScoring};
use super::profile;
use super::radar::{radar_scores, RadarInputs};
use super::report::{
    write_artifacts, AnswerFlags, ArmReport, EvalReport, RetrievalRow, SemanticRow, Table,
    Timestamps,
};

/// One arm's live pieces: its config plus constructed providers.
pub(crate) struct ArmRuntime {
    pub(crate) config: ArmConfig,
    pub(crate) doc_provider: Arc<dyn EmbeddingProvider>,
    pub(crate) query_provider: Arc<dyn EmbeddingProvider>,
}

/// Externally supplied providers for one arm, for tests and tools that need
/// to observe or script the embedding boundary.
pub struct ArmComponents {
    pub doc_provider: Arc<dyn EmbeddingProvider>,
    pub query_provider: Arc<dyn EmbeddingProvider>,
}

pub(crate) enum DocEmbedding {
    Dense(DenseEmbedding),
    Late(MultiVectorEmbedding),
}

impl DocEmbedding {
    pub(crate) fn rows(&self) -> Vec<Vec<f32>> {
        match self {
            DocEmbedding::Dense(e) => vec![e.values().to_vec()],
            DocEmbedding::Late(m) => m.vectors().iter().map(|v| v.values().to_vec()).collect(),
        }
    }
}

pub(crate) enum QueryEmbedding {
    One(DenseEmbedding),
    Multi(MultiVectorEmbedding),
}

impl QueryEmbedding {
    pub(crate) fn rows(&self) -> Vec<Vec<f32>> {
        match self {
            QueryEmbedding::One(e) => vec![e.values().to_vec()],
            QueryEmbedding::Multi(m) => {
                m.vectors().iter().map(|v| v.values().to_vec()).collect()
            }
        }
    }
}

pub(crate) enum ArmIndex {
    Dense(DenseIndex),
    Late(LateIndex),
}

impl ArmIndex {
    pub(crate) fn docs(&self) -> usize {
        match self {
            ArmIndex::Dense(ix) => ix.len(),
            ArmIndex::Late(ix) => ix.len(),
        }
    }

    pub(crate) fn vectors(&self) -> usize {
        match self {
            ArmIndex::Dense(ix) => ix.len(),
            ArmIndex::Late(ix) => ix.total_vectors(),
        }
    }

    pub(crate) fn snapshot_bytes(&self) -> u64 {
        match self {
            ArmIndex::Dense(ix) => ix.snapshot_bytes(),
            ArmIndex::Late(ix) => ix.snapshot_bytes(),
        }
    }

    pub(crate) fn in_memory_bytes(&self) -> u64 {
        match self {
            ArmIndex::Dense(ix) => ix.in_memory_bytes(),
            ArmIndex::Late(ix) => ix.in_memory_bytes(),
        }
    }

    pub(crate) fn write_snapshot(&self, path: &Path) -> Result<u64, IndexError> {
        match self {
            ArmIndex::Dense(ix) => ix.write_snapshot(path),
            ArmIndex::Late(ix) => ix.write_snapshot(path),
        }
    }

    pub(crate) fn read_snapshot(kind: IndexKind, path: &Path) -> Result<Self, IndexError> {
        match kind {
            IndexKind::Dense => Ok(ArmIndex::Dense(DenseIndex::read_snapshot(path)?)),
            IndexKind::Late => Ok(ArmIndex::Late(LateIndex::read_snapshot(path)?)),
        }
    }

    pub(crate) fn search(&self, q: &QueryEmbedding, k: usize) -> Result<RankedResult, IndexError> {
        match (self, q) {
            (ArmIndex::Dense(ix), QueryEmbedding::One(q)) => ix.query(q, k),
            (ArmIndex::Late(ix), QueryEmbedding::One(q)) => ix.query(q, k),
            (ArmIndex::Late(ix), QueryEmbedding::Multi(q)) => ix.query_multi(q, k),
            (ArmIndex::Dense(_), QueryEmbedding::Multi(_)) => {
                unreachable!("multi-vector queries are rejected for dense arms at config time")
            }
        }
    }
}

impl ArmRuntime {
    pub(crate) fn from_config(arm: &ArmConfig) -> Result<Self> {
        Ok(ArmRuntime {
            config: arm.clone(),
            doc_provider: arm.doc_embedder.build()?,
            query_provider: arm.query_embedder.build()?,
        })
    }

    /// The texts this arm embeds for one document: its chunks when chunking,
    /// otherwise the configured channel rendition.
    pub(crate) fn doc_texts<'c>(&self, doc: &'c DocumentRecord) -> Result<Vec<&'c str>, CorpusError> {
        if self.config.chunking {
            let chunks = doc.chunks.as_ref().ok_or_else(|| CorpusError::MissingChunks {
                doc_id: doc.doc_id.clone(),
                arm: self.config.name.clone(),
            })?;
            return Ok(chunks.iter().map(String::as_str).collect());
        }
        let text = self.channel_text(doc)?;
        Ok(vec![text])
    }

    pub(crate) fn channel_text<'c>(&self, doc: &'c DocumentRecord) -> Result<&'c str, CorpusError> {
        doc.channels
            .get(&self.config.channel)
            .map(String::as_str)
            .filter(|t| !t.trim().is_empty())
            .ok_or_else(|| CorpusError::MissingChannel {
                doc_id: doc.doc_id.clone(),
                channel: self.config.channel.clone(),
                arm: self.config.name.clone(),
            })
    }

    pub(crate) fn embed_doc_with(
        &self,
        provider: &dyn EmbeddingProvider,
        doc: &DocumentRecord,
    ) -> Result<DocEmbedding> {
        let texts = self.doc_texts(doc)?;
        match self.config.index {
            IndexKind::Dense => Ok(DocEmbedding::Dense(embed_text(provider, texts[0])?)),
            IndexKind::Late => Ok(DocEmbedding::Late(embed_chunks(provider, &texts)?)),
        }
    }

    pub(crate) fn embed_question_with(
        &self,
        provider: &dyn EmbeddingProvider,
        question: &str,
    ) -> Result<QueryEmbedding> {
        match (self.config.index, self.config.late_scoring) {
            (IndexKind::Late, LateScoring::SumMax) => {
                // One query vector per whitespace token; corpus validation
                // guarantees at least one token.
                let mut vectors = Vec::new();
                for token in question.split_whitespace() {
                    vectors.push(embed_query(provider, token)?);
                }
                Ok(QueryEmbedding::Multi(MultiVectorEmbedding::new(vectors)?))
            }
            _ => Ok(QueryEmbedding::One(embed_query(provider, question)?)),
        }
    }

    pub(crate) fn build_index_from(
        &self,
        ids: Vec<String>,
        embeddings: Vec<DocEmbedding>,
    ) -> Result<ArmIndex> {
        match self.config.index {
            IndexKind::Dense => {
                let mut pairs = Vec::with_capacity(ids.len());
                for (id, e) in ids.into_iter().zip(embeddings) {
                    match e {
                        DocEmbedding::Dense(d) => pairs.push((id, d)),
                        DocEmbedding::Late(_) => {
                            unreachable!("dense arm produced a multi-vector embedding")
                        }
                    }
                }
                Ok(ArmIndex::Dense(DenseIndex::build(pairs)?))
            }
            IndexKind::Late => {
                let mut pairs = Vec::with_capacity(ids.len());
                for (id, e) in ids.into_iter().zip(embeddings) {
                    match e {
                        DocEmbedding::Late(m) => pairs.push((id, m)),
                        DocEmbedding::Dense(_) => {
                            unreachable!("late arm produced a single-vector embedding")
                        }
                    }
                }
                Ok(ArmIndex::Late(LateIndex::build(pairs)?))
            }
        }
    }

    pub(crate) fn build_index(&self, corpus: &Corpus) -> Result<ArmIndex> {
        let mut ids = Vec::with_capacity(corpus.documents().len());
        let mut embeddings = Vec::with_capacity(corpus.documents().len());
        for doc in corpus.documents() {
            ids.push(doc.doc_id.clone());
            embeddings.push(self.embed_doc_with(&*self.doc_provider, doc).map_err(|e| {
                log::error!("arm `{}`: embedding doc `{}` failed", self.config.name, doc.doc_id);
                e
            })?);
        }
        self.build_index_from(ids, embeddings)
    }

    pub(crate) fn retrieve(
        &self,
        index: &ArmIndex,
        question: &str,
        k: usize,
    ) -> Result<RankedResult> {
        let q = self.embed_question_with(&*self.query_provider, question)?;
        Ok(index.search(&q, k)?)
    }
}

pub struct Runner {
    config: ExperimentConfig,
    corpus: Corpus,
    arms: Vec<ArmRuntime>,
    generator: Option<Arc<dyn GenerationProvider>>,
    answer_options: AnswerOptions,
}

impl Runner {
    /// Builds every provider from the config and loads the corpus.
    pub fn from_config(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let corpus = load_corpus(&config.corpus)?;
        let arms = config
            .arms
            .iter()
            .map(ArmRuntime::from_config)
            .collect::<Result<Vec<_>>>()?;
        let generator = match &config.generation {
            Some(spec) if config.semantic.enabled => Some(spec.build()?),
            _ => None,
        };
        Runner::assemble(config, corpus, arms, generator)
    }

    /// Same engine with injected providers, so tests can count calls and
    /// script failures per arm. `components` must match `config.arms` in
    /// length and order.
    pub fn with_components(
        config: ExperimentConfig,
        corpus: Corpus,
        components: Vec<ArmComponents>,
        generator: Option<Arc<dyn GenerationProvider>>,
    ) -> Result<Self> {
        config.validate()?;
        if components.len() != config.arms.len() {
            return Err(ConfigError::Invalid {
                message: format!(
                    "{} component set(s) supplied for {} arm(s)",
                    components.len(),
                    config.arms.len()
                ),
            }
            .into());
        }
        let arms = config
            .arms
            .iter()
            .zip(components)
            .map(|(arm, parts)| ArmRuntime {
                config: arm.clone(),
                doc_provider: parts.doc_provider,
                query_provider: parts.query_provider,
            })
            .collect();
        Runner::assemble(config, corpus, arms, generator)
    }

    fn assemble(
        config: ExperimentConfig,
        corpus: Corpus,
        arms: Vec<ArmRuntime>,
        generator: Option<Arc<dyn GenerationProvider>>,
    ) -> Result<Self> {
        if corpus.qa_pairs().is_empty() {
            return Err(CorpusError::NoQuestions.into());
        }
        // Reject data gaps now, before any provider is billed: every arm
        // needs its channel (and chunks, if chunking) on every document.
        for arm in &arms {
            for doc in corpus.documents() {
                arm.doc_texts(doc)?;
                arm.channel_text(doc)?;
            }
        }
        if config.semantic.enabled && generator.is_none() {
            return Err(ConfigError::Invalid {
                message: "semantic evaluation enabled but no generator supplied".to_string(),
            }
            .into());
        }
        let templates = PromptTemplates::from_files(
            config.prompts.qa_template.as_deref(),
            config.prompts.answer_template.as_deref(),
        )?;
        let answer_options = AnswerOptions {
            context_token_budget: config.semantic.context_token_budget,
            templates,
        };
        Ok(Runner {
            config,
            corpus,
            arms,
            generator,
            answer_options,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn run(&self) -> Result<EvalReport> {
        let wall = Instant::now();
        let started_unix = unix_now();
        let out_dir = self.config.out_dir.as_deref();
        if let Some(dir) = out_dir {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let fingerprint = self.config.fingerprint();
        let mut checkpoint = out_dir
            .and_then(|dir| Checkpoint::load(dir, &fingerprint))
            .unwrap_or_else(|| Checkpoint::new(fingerprint));
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.config.workers)
            .build()
            .map_err(|e| ConfigError::Invalid {
                message: format!("worker pool: {e}"),
            })?;

        let result = self
            .evaluate_all(&pool, out_dir, &mut checkpoint)
            .and_then(|()| self.finish(&checkpoint, out_dir, wall, started_unix));
        match result {
            Ok(report) => {
                if let Some(dir) = out_dir {
                    Checkpoint::remove(dir);
                }
                Ok(report)
            }
            Err(e) => {
                match out_dir {
                    Some(dir) => match checkpoint.save(dir) {
                        Ok(()) => log::info!(
                            "progress saved to {}",
                            Checkpoint::path_in(dir).display()
                        ),
                        Err(save) => log::warn!("could not save checkpoint: {save}"),
                    },
                    None => log::warn!("no out_dir configured; progress was not checkpointed"),
                }
                Err(e)
            }
        }
    }

    /// Builds or reloads each arm's index, then evaluates whatever queries
    /// the checkpoint has not already covered. All pending queries are
    /// attempted even when one fails, so a flaky provider loses as little
    /// work as possible; the first failure (in query order) is returned.
    fn evaluate_all(
        &self,
        pool: &rayon::ThreadPool,
        out_dir: Option<&Path>,
        checkpoint: &mut Checkpoint,
    ) -> Result<()> {
        for (position, arm) in self.arms.iter().enumerate() {
            let index = self.obtain_index(position, arm, out_dir, checkpoint)?;
            let done = checkpoint
                .outcomes
                .entry(arm.config.name.clone())
                .or_default();
            let pending: Vec<(String, &QAPair)> = self
                .corpus
                .qa_pairs()
                .iter()
                .enumerate()
                .map(|(i, pair)| (qa_query_id(i), pair))
                .filter(|(query_id, _)| !done.contains_key(query_id))
                .collect();
            if pending.is_empty() {
                log::info!("arm `{}`: nothing pending", arm.config.name);
                continue;
            }
            log::info!(
                "arm `{}`: evaluating {} question(s)",
                arm.config.name,
                pending.len()
            );
            let results: Vec<(String, Result<QueryOutcome>)> = pool.install(|| {
                pending
                    .par_iter()
                    .map(|(query_id, pair)| {
                        (
                            query_id.clone(),
                            self.evaluate_query(arm, &index, query_id, pair),
                        )
                    })
                    .collect()
            });
            let mut first_error = None;
            for (query_id, result) in results {
                match result {
                    Ok(outcome) => {
                        done.insert(query_id, outcome);
                    }
                    Err(e) => {
                        if first_error.is_none() {
                            first_error = Some(e);
                        }
                    }
                }
            }
            if let Some(e) = first_error {
                return Err(e);
            }
        }
        Ok(())
    }

    fn obtain_index(
        &self,
        position: usize,
        arm: &ArmRuntime,
        out_dir: Option<&Path>,
        checkpoint: &mut Checkpoint,
    ) -> Result<ArmIndex> {
        if let (Some(dir), Some(file)) = (out_dir, checkpoint.index_files.get(&arm.config.name)) {
            let path = dir.join(file);
            if path.exists() {
                match ArmIndex::read_snapshot(arm.config.index, &path) {
                    Ok(index) => {
                        log::info!(
                            "arm `{}`: reusing index snapshot {}",
                            arm.config.name,
                            path.display()
                        );
                        return Ok(index);
                    }
                    Err(e) => log::warn!(
                        "arm `{}`: snapshot {} unusable ({e}); rebuilding",
                        arm.config.name,
                        path.display()
                    ),
                }
            }
        }
        let index = arm.build_index(&self.corpus)?;
        if let Some(dir) = out_dir {
            let file = format!("index-{:02}-{}.snap", position, file_stem_for(&arm.config.name));
            index.write_snapshot(&dir.join(&file))?;
            checkpoint.index_files.insert(arm.config.name.clone(), file);
        }
        Ok(index)
    }

    fn evaluate_query(
        &self,
        arm: &ArmRuntime,
        index: &ArmIndex,
        query_id: &str,
        pair: &QAPair,
    ) -> Result<QueryOutcome> {
        let mut ranked = arm.retrieve(index, &pair.question, self.config.k)?;
        ranked.query_id = query_id.to_string();
        let judgment = RetrievalJudgment {
            query_id: query_id.to_string(),
            gold_doc_id: pair.doc_id.clone(),
            ranked,
        };
        let answer = if self.config.semantic.enabled {
            let generator = self.generator.as_ref().expect("validated at assembly");
            // Context passages are the retrieved documents' channel texts in
            // rank order; generation never sees the gold label.
            let context: Vec<String> = judgment
                .ranked
                .hits
                .iter()
                .filter_map(|hit| self.corpus.doc(&hit.doc_id))
                .filter_map(|doc| arm.channel_text(doc).ok())
                .map(str::to_string)
                .collect();
            Some(generate_answer(
                &**generator,
                &pair.question,
                &context,
                &self.answer_options,
            )?)
        } else {
            None
        };
        Ok(QueryOutcome { judgment, answer })
    }

    fn finish(
        &self,
        checkpoint: &Checkpoint,
        out_dir: Option<&Path>,
        wall: Instant,
        started_unix: u64,
    ) -> Result<EvalReport> {
        let k = self.config.k;
        let pairs = self.corpus.qa_pairs();
        let levels: Vec<u8> = pairs
            .iter()
            .map(|p| self.corpus.level_of(&p.doc_id).expect("validated corpus"))
            .collect();

        let mut arm_reports = Vec::with_capacity(self.arms.len());
        let mut radar_inputs = Vec::with_capacity(self.arms.len());
        for arm in &self.arms {
            let outcomes = checkpoint
                .outcomes
                .get(&arm.config.name)
                .expect("every arm evaluated before aggregation");
            let ordered: Vec<&QueryOutcome> = (0..pairs.len())
                .map(|i| {
                    outcomes
                        .get(&qa_query_id(i))
                        .expect("every query evaluated before aggregation")
                })
                .collect();

            let mut judgments_by_level: BTreeMap<u8, Vec<RetrievalJudgment>> = BTreeMap::new();
            let mut judgments: Vec<RetrievalJudgment> = Vec::with_capacity(ordered.len());
            for (i, outcome) in ordered.iter().enumerate() {
                judgments_by_level
                    .entry(levels[i])
                    .or_default()
                    .push(outcome.judgment.clone());
                judgments.push(outcome.judgment.clone());
            }
            let retrieval_row = |js: &[RetrievalJudgment]| -> Result<RetrievalRow> {
                Ok(RetrievalRow {
                    questions: js.len(),
                    mrr: mrr(js)?,
                    recall: recall_at_k(js, k)?,
                    ndcg: ndcg_at_k(js, k)?,
                })
            };
            let mut per_level = BTreeMap::new();
            for (level, js) in &judgments_by_level {
                per_level.insert(*level, retrieval_row(js)?);
            }
            let retrieval = Table {
                per_level,
                total: retrieval_row(&judgments)?,
            };

            let (semantic, answer_flags) = if self.config.semantic.enabled {
                let mut by_level: BTreeMap<u8, Vec<AnswerPair>> = BTreeMap::new();
                let mut all: Vec<AnswerPair> = Vec::with_capacity(ordered.len());
                let mut flags = AnswerFlags {
                    no_context: 0,
                    truncated_context: 0,
                };
                for (i, outcome) in ordered.iter().enumerate() {
                    let answer = outcome
                        .answer
                        .as_ref()
                        .expect("semantic runs record answers");
                    if answer.no_context {
                        flags.no_context += 1;
                    }
                    if answer.truncated {
                        flags.truncated_context += 1;
                    }
                    let answer_pair = AnswerPair {
                        query_id: qa_query_id(i),
                        generated: answer.text.clone(),
                        reference: pairs[i].reference_answer.clone(),
                    };
                    by_level.entry(levels[i]).or_default().push(answer_pair.clone());
                    all.push(answer_pair);
                }
                let semantic_row = |ps: &[AnswerPair]| -> Result<SemanticRow> {
                    let r = semantic_report(ps)?;
                    Ok(SemanticRow {
                        questions: r.pairs,
                        exact_match: r.exact_match,
                        bleu: r.bleu,
                        rouge_1: r.rouge_1,
                        rouge_l: r.rouge_l,
                    })
                };
                let mut per_level = BTreeMap::new();
                for (level, ps) in &by_level {
                    per_level.insert(*level, semantic_row(ps)?);
                }
                (
                    Some(Table {
                        per_level,
                        total: semantic_row(&all)?,
                    }),
                    Some(flags),
                )
            } else {
                (None, None)
            };

            let efficiency = if self.config.profiling.enabled {
                Some(profile::profile_arm(arm, &self.corpus, k)?)
            } else {
                None
            };

            radar_inputs.push(RadarInputs {
                arm: arm.config.name.clone(),
                mrr_clean: match judgments_by_level.get(&0) {
                    Some(js) => Some(mrr(js)?),
                    None => None,
                },
                mrr_noisy: match judgments_by_level.get(&3) {
                    Some(js) => Some(mrr(js)?),
                    None => None,
                },
                rouge_l: semantic.as_ref().map(|t| t.total.rouge_l),
                retrieval_latency_s: efficiency
                    .as_ref()
                    .map(|e| e.retrieval_latency_per_query_s),
                memory_bytes: efficiency.as_ref().map(|e| e.memory_per_1k_docs_bytes),
            });
            arm_reports.push(ArmReport {
                name: arm.config.name.clone(),
                retrieval,
                semantic,
                efficiency,
                answer_flags,
            });
        }

        let (radar, radar_warnings) = radar_scores(&radar_inputs);
        let timestamps = self.config.output.timestamps.then(|| Timestamps {
            started_unix_s: started_unix,
            finished_unix_s: unix_now(),
            wall_time_s: wall.elapsed().as_secs_f64(),
        });
        let report = EvalReport {
            schema_version: 1,
            config: self.config.clone(),
            question_counts: self.corpus.question_counts_by_level(),
            total_questions: pairs.len(),
            arms: arm_reports,
            radar,
            radar_warnings,
            timestamps,
        };
        if let Some(dir) = out_dir {
            write_artifacts(&report, dir)?;
        }
        Ok(report)
    }
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(SystemTime::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn file_stem_for(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '-' })
        .collect()
}

/// Loads the corpus and runs the full experiment described by `config`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<EvalReport> {
    Runner::from_config(config.clone())?.run()
}

pub(crate) fn find_arm<'c>(
    config: &'c ExperimentConfig,
    name: &str,
) -> Result<&'c ArmConfig, ConfigError> {
    config.arms.iter().find(|a| a.name == name).ok_or_else(|| ConfigError::Invalid {
        message: format!("no arm named `{name}`"),
    })
}

/// Doc-side embeddings for one arm, in corpus order. Each document yields one
/// row per vector (dense arms always one, chunking arms one per chunk).
pub fn embed_corpus_for_arm(
    config: &ExperimentConfig,
    arm_name: &str,
) -> Result<Vec<(String, Vec<Vec<f32>>)>> {
    config.validate()?;
    let arm = ArmRuntime::from_config(find_arm(config, arm_name)?)?;
    let corpus = load_corpus(&config.corpus)?;
    let mut out = Vec::with_capacity(corpus.documents().len());
    for doc in corpus.documents() {
        let e = arm.embed_doc_with(&*arm.doc_provider, doc)?;
        out.push((doc.doc_id.clone(), e.rows()));
    }
    Ok(out)
}

/// Query-side embedding for one arm: a single row, or one row per question
/// token for arms that score summed per-token matches.
pub fn embed_query_for_arm(
    config: &ExperimentConfig,
    arm_name: &str,
    question: &str,
) -> Result<Vec<Vec<f32>>> {
    config.validate()?;
    let arm = ArmRuntime::from_config(find_arm(config, arm_name)?)?;
    let q = arm.embed_question_with(&*arm.query_provider, question)?;
    Ok(q.rows())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexBuildSummary {
    pub arm: String,
    pub docs: usize,
    pub vectors: usize,
    pub bytes_written: u64,
    pub path: PathBuf,
}

/// Builds one arm's index over the corpus and writes its snapshot to `out`.
pub fn build_index_for_arm(
    config: &ExperimentConfig,
    arm_name: &str,
    out: &Path,
) -> Result<IndexBuildSummary> {
    config.validate()?;
    let arm = ArmRuntime::from_config(find_arm(config, arm_name)?)?;
    let corpus = load_corpus(&config.corpus)?;
    let index = arm.build_index(&corpus)?;
    let bytes_written = index.write_snapshot(out)?;
    Ok(IndexBuildSummary {
        arm: arm_name.to_string(),
        docs: index.docs(),
        vectors: index.vectors(),
        bytes_written,
        path: out.to_path_buf(),
    })
}

/// Produces a corpus whose documents are unchanged and whose pairs are newly
/// generated: `per_doc` questions per document from the configured provider.
/// Pre-existing pairs in the input corpus are dropped, not merged.
pub fn generate_qa_corpus(config: &ExperimentConfig) -> Result<Corpus> {
    config.validate()?;
    let spec = config.generation.as_ref().ok_or_else(|| ConfigError::Invalid {
        message: "question generation needs a [generation] provider".to_string(),
    })?;
    let provider = spec.build()?;
    let corpus = load_corpus(&config.corpus)?;
    let templates = PromptTemplates::from_files(
        config.prompts.qa_template.as_deref(),
        config.prompts.answer_template.as_deref(),
    )?;
    let options = QaGenOptions {
        max_reasks: config.qa_generation.max_reasks,
        templates,
    };
    let mut pairs = Vec::with_capacity(corpus.documents().len() * config.qa_generation.per_doc);
    for doc in corpus.documents() {
        let generated = generate_qa_pairs(
            &*provider,
            doc,
            &config.qa_generation.channel,
            config.qa_generation.per_doc,
            &options,
        )?;
        pairs.extend(generated);
    }
    Ok(Corpus::new(corpus.documents().to_vec(), pairs)?)
}
