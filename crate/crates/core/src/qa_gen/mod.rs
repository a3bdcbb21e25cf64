//! Question/answer generation: producing evaluation pairs from documents and
//! producing answers from retrieved context, through a pluggable chat-style
//! provider.
//!
//! Three providers ship with the crate: [`RemoteGenerator`] speaks the
//! chat-completions convention, [`MockGenerator`] replays scripted responses
//! for offline tests, and [`ExtractiveGenerator`] deterministically lifts the
//! best-overlapping context sentence so end-to-end runs work with no service
//! at all. Prompts live in versioned template files (embedded defaults,
//! overridable per config) so experiments are reproducible.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{DocumentRecord, QAPair};
use crate::error::ErrorClass;

mod extractive;
mod mock;
mod parse;
mod remote;

pub use extractive::ExtractiveGenerator;
pub use mock::MockGenerator;
pub use remote::{RemoteGenerator, RemoteGeneratorConfig};

#[derive(Debug, Error)]
pub enum GenError {
    #[error("question must be non-empty")]
    EmptyQuestion,
    #[error("doc `{doc_id}`: channel `{channel}` is missing or empty")]
    MissingChannel { doc_id: String, channel: String },
    #[error("pair count must be at least 1")]
    InvalidN,
    #[error("generation request failed after {attempts} attempt(s): {message}")]
    Provider { attempts: u32, message: String },
    #[error("malformed generation response: {message}")]
    MalformedResponse { message: String },
    #[error("provider returned an empty completion")]
    EmptyCompletion,
    #[error("no question/answer pairs found in provider output")]
    Unparseable {
        /// Raw payload retained for debugging.
        raw: String,
    },
    #[error("got {} unique pairs of {requested} after {asks} ask(s)", obtained.len())]
    Partial {
        requested: usize,
        asks: u32,
        /// What was obtained before the retry budget ran out.
        obtained: Vec<QAPair>,
    },
    #[error("mock script exhausted after {served} response(s)")]
    ScriptExhausted { served: usize },
    #[error("no scripted response matches the prompt")]
    NoScriptedResponse,
    #[error("mock script {path}: {message}")]
    BadScript { path: PathBuf, message: String },
    #[error("prompt template {path}: {source}")]
    Template {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("auth token variable `{var}` is not set")]
    MissingAuthToken { var: String },
}

impl GenError {
    pub fn class(&self) -> ErrorClass {
        match self {
            GenError::Provider { .. }
            | GenError::MalformedResponse { .. }
            | GenError::EmptyCompletion
            | GenError::Unparseable { .. }
            | GenError::Partial { .. }
            | GenError::ScriptExhausted { .. }
            | GenError::NoScriptedResponse => ErrorClass::Provider,
            GenError::Template { .. }
            | GenError::BadScript { .. }
            | GenError::MissingAuthToken { .. } => ErrorClass::Config,
            GenError::EmptyQuestion | GenError::MissingChannel { .. } | GenError::InvalidN => {
                ErrorClass::Data
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "user".into(),
            content: content.into(),
        }
    }
}

/// Boundary to the generation model. Implementations must be safe for
/// concurrent calls; scripted sequence mocks are only deterministic when the
/// engine runs single-worker.
pub trait GenerationProvider: Send + Sync {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, GenError>;
}

impl<T: GenerationProvider + ?Sized> GenerationProvider for Arc<T> {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, GenError> {
        (**self).complete(messages)
    }
}

/// The prompt pair used for generation, version-pinned. `{n}`, `{document}`,
/// `{context}`, and `{question}` are the placeholders.
#[derive(Debug, Clone)]
pub struct PromptTemplates {
    qa: String,
    answer: String,
}

impl Default for PromptTemplates {
    fn default() -> Self {
        PromptTemplates {
            qa: include_str!("../../prompts/qa_pairs_v1.txt").to_string(),
            answer: include_str!("../../prompts/answer_v1.txt").to_string(),
        }
    }
}

impl PromptTemplates {
    /// Embedded defaults, with either template replaced from a file when a
    /// path is configured.
    pub fn from_files(
        qa_template: Option<&Path>,
        answer_template: Option<&Path>,
    ) -> Result<Self, GenError> {
        let read = |path: &Path| {
            std::fs::read_to_string(path).map_err(|source| GenError::Template {
                path: path.to_path_buf(),
                source,
            })
        };
        let mut templates = PromptTemplates::default();
        if let Some(path) = qa_template {
            templates.qa = read(path)?;
        }
        if let Some(path) = answer_template {
            templates.answer = read(path)?;
        }
        Ok(templates)
    }

    fn render_qa(&self, n: usize, document: &str) -> String {
        self.qa
            .replace("{n}", &n.to_string())
            .replace("{document}", document)
    }

    fn render_answer(&self, question: &str, context: &str) -> String {
        self.answer
            .replace("{context}", context)
            .replace("{question}", question)
    }
}

#[derive(Debug, Clone)]
pub struct QaGenOptions {
    /// Re-asks allowed after the first request when deduplication leaves
    /// fewer than n unique questions.
    pub max_reasks: u32,
    pub templates: PromptTemplates,
}

impl Default for QaGenOptions {
    fn default() -> Self {
        QaGenOptions {
            max_reasks: 3,
            templates: PromptTemplates::default(),
        }
    }
}

/// Asks the provider for `n` question/answer pairs about one document
/// channel. Questions are deduplicated by exact string; shortfalls trigger
/// re-asks up to the budget, after which a partial-result error carries
/// whatever was obtained.
pub fn generate_qa_pairs(
    provider: &dyn GenerationProvider,
    doc: &DocumentRecord,
    channel: &str,
    n: usize,
    options: &QaGenOptions,
) -> Result<Vec<QAPair>, GenError> {
    if n == 0 {
        return Err(GenError::InvalidN);
    }
    let text = doc
        .channels
        .get(channel)
        .filter(|t| !t.trim().is_empty())
        .ok_or_else(|| GenError::MissingChannel {
            doc_id: doc.doc_id.clone(),
            channel: channel.to_string(),
        })?;

    let mut pairs: Vec<QAPair> = Vec::with_capacity(n);
    let mut seen = std::collections::BTreeSet::new();
    let mut asks = 0;
    while pairs.len() < n && asks < 1 + options.max_reasks {
        let need = n - pairs.len();
        let prompt = options.templates.render_qa(need, text);
        asks += 1;
        let raw = provider.complete(&[ChatMessage::user(prompt)])?;
        for (question, answer) in parse::parse_pairs(&raw)? {
            if seen.insert(question.clone()) {
                pairs.push(QAPair {
                    doc_id: doc.doc_id.clone(),
                    question,
                    reference_answer: answer,
                });
                if pairs.len() == n {
                    break;
                }
            }
        }
    }
    if pairs.len() < n {
        return Err(GenError::Partial {
            requested: n,
            asks,
            obtained: pairs,
        });
    }
    Ok(pairs)
}

#[derive(Debug, Clone)]
pub struct AnswerOptions {
    /// Whitespace-token budget for the joined context; `None` is unlimited.
    pub context_token_budget: Option<usize>,
    pub templates: PromptTemplates,
}

impl Default for AnswerOptions {
    fn default() -> Self {
        AnswerOptions {
            context_token_budget: None,
            templates: PromptTemplates::default(),
        }
    }
}

/// An answer plus the degenerate-input flags the report counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedAnswer {
    pub text: String,
    /// The retrieval stage supplied no context at all.
    pub no_context: bool,
    /// Context was cut to fit the token budget (lowest-ranked passages
    /// dropped first).
    pub truncated: bool,
}

/// Fits rank-ordered passages into `budget` whitespace tokens: passages are
/// kept best-first, the one that crosses the budget is cut at the boundary,
/// and everything after it is dropped.
fn apply_budget(context: &[String], budget: Option<usize>) -> (Vec<String>, bool) {
    let Some(budget) = budget else {
        return (context.to_vec(), false);
    };
    let mut kept = Vec::with_capacity(context.len());
    let mut used = 0;
    let mut truncated = false;
    for passage in context {
        let tokens: Vec<&str> = passage.split_whitespace().collect();
        if used + tokens.len() <= budget {
            used += tokens.len();
            kept.push(passage.clone());
            continue;
        }
        let remaining = budget - used;
        if remaining > 0 {
            kept.push(tokens[..remaining].join(" "));
        }
        truncated = true;
        break;
    }
    (kept, truncated)
}

/// Generates one answer from rank-ordered context passages. Empty context is
/// answered anyway and flagged; context over the token budget is truncated
/// tail-first and flagged.
pub fn generate_answer(
    provider: &dyn GenerationProvider,
    question: &str,
    context: &[String],
    options: &AnswerOptions,
) -> Result<GeneratedAnswer, GenError> {
    if question.trim().is_empty() {
        return Err(GenError::EmptyQuestion);
    }
    let no_context = context.is_empty();
    let (kept, truncated) = apply_budget(context, options.context_token_budget);
    if truncated {
        log::warn!("context for question truncated to fit token budget");
    }
    let context_text = if kept.is_empty() {
        "(no context retrieved)".to_string()
    } else {
        kept.join("\n\n")
    };
    let prompt = options.templates.render_answer(question, &context_text);
    let text = provider.complete(&[ChatMessage::user(prompt)])?;
    if text.trim().is_empty() {
        return Err(GenError::EmptyCompletion);
    }
    Ok(GeneratedAnswer {
        text,
        no_context,
        truncated,
    })
}
