//! Corpus loading, validation, and segmentation.
//!
//! A corpus is a UTF-8 file with one JSON record per line. Document records
//! look like
//!
//! ```text
//! {"kind":"doc","doc_id":"p1","level":0,"channels":{"native":"..."},"chunks":["..."],"features":["table"]}
//! ```
//!
//! and question/answer records like
//!
//! ```text
//! {"kind":"qa","doc_id":"p1","question":"...","answer":"..."}
//! ```
//!
//! `chunks` and `features` are optional. Documents carry named text channels
//! (for example the outputs of different OCR engines) side by side, so one
//! corpus file serves every pipeline configuration. Malformed lines are
//! always hard errors with line numbers; records are never silently dropped.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corpus line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("duplicate doc_id `{doc_id}`")]
    DuplicateDocId { doc_id: String },
    #[error("document with empty doc_id")]
    EmptyDocId,
    #[error("doc `{doc_id}`: degradation level {level} outside 0..=3")]
    InvalidLevel { doc_id: String, level: u8 },
    #[error("doc `{doc_id}`: chunks present but empty")]
    EmptyChunkList { doc_id: String },
    #[error("doc `{doc_id}`: chunk {index} is empty")]
    EmptyChunk { doc_id: String, index: usize },
    #[error("qa pair {query_id} references unknown doc `{doc_id}`")]
    DanglingQaRef { query_id: String, doc_id: String },
    #[error("qa pair {query_id}: {field} is empty")]
    EmptyQaField {
        query_id: String,
        field: &'static str,
    },
    #[error("doc `{doc_id}`: channel `{channel}` is missing or empty (required by arm `{arm}`)")]
    MissingChannel {
        doc_id: String,
        channel: String,
        arm: String,
    },
    #[error("doc `{doc_id}` has no chunk list (required by chunking arm `{arm}`)")]
    MissingChunks { doc_id: String, arm: String },
    #[error("corpus has no question/answer pairs to evaluate")]
    NoQuestions,
}

/// One corpus page: a degradation label plus one or more text renditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentRecord {
    pub doc_id: String,
    /// Degradation level, 0 (native digital) through 3 (severely degraded).
    pub level: u8,
    /// Channel name to full-page text.
    pub channels: BTreeMap<String, String>,
    /// Ordered text units for multi-vector embedding, if pre-chunked.
    pub chunks: Option<Vec<String>>,
    pub features: Option<Vec<String>>,
}

/// One evaluation unit: a question about a document and its reference answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QAPair {
    pub doc_id: String,
    pub question: String,
    pub reference_answer: String,
}

/// Stable query identifier for the qa pair at `index` (0-based file order).
/// Reports, checkpoints, and validation findings all use this form.
pub fn qa_query_id(index: usize) -> String {
    format!("q{index:05}")
}

/// An immutable, validated document collection with its question set.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    documents: Vec<DocumentRecord>,
    qa_pairs: Vec<QAPair>,
    by_id: BTreeMap<String, usize>,
}

impl Corpus {
    /// Validates structural invariants and builds the id lookup. Fails on the
    /// first violation: empty or duplicate doc ids, levels outside 0..=3,
    /// empty chunk lists or chunks, qa pairs with empty fields or referencing
    /// unknown documents.
    pub fn new(documents: Vec<DocumentRecord>, qa_pairs: Vec<QAPair>) -> Result<Self, CorpusError> {
        let mut by_id = BTreeMap::new();
        for (i, doc) in documents.iter().enumerate() {
            if doc.doc_id.is_empty() {
                return Err(CorpusError::EmptyDocId);
            }
            if doc.level > 3 {
                return Err(CorpusError::InvalidLevel {
                    doc_id: doc.doc_id.clone(),
                    level: doc.level,
                });
            }
            if let Some(chunks) = &doc.chunks {
                if chunks.is_empty() {
                    return Err(CorpusError::EmptyChunkList {
                        doc_id: doc.doc_id.clone(),
                    });
                }
                if let Some(pos) = chunks.iter().position(|c| c.trim().is_empty()) {
                    return Err(CorpusError::EmptyChunk {
                        doc_id: doc.doc_id.clone(),
                        index: pos,
                    });
                }
            }
            if by_id.insert(doc.doc_id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateDocId {
                    doc_id: doc.doc_id.clone(),
                });
            }
        }
        for (i, pair) in qa_pairs.iter().enumerate() {
            let query_id = qa_query_id(i);
            if pair.question.trim().is_empty() {
                return Err(CorpusError::EmptyQaField {
                    query_id,
                    field: "question",
                });
            }
            if pair.reference_answer.trim().is_empty() {
                return Err(CorpusError::EmptyQaField {
                    query_id,
                    field: "answer",
                });
            }
            if !by_id.contains_key(&pair.doc_id) {
                return Err(CorpusError::DanglingQaRef {
                    query_id,
                    doc_id: pair.doc_id.clone(),
                });
            }
        }
        Ok(Corpus {
            documents,
            qa_pairs,
            by_id,
        })
    }

    pub fn documents(&self) -> &[DocumentRecord] {
        &self.documents
    }

    pub fn qa_pairs(&self) -> &[QAPair] {
        &self.qa_pairs
    }

    pub fn doc(&self, doc_id: &str) -> Option<&DocumentRecord> {
        self.by_id.get(doc_id).map(|&i| &self.documents[i])
    }

    /// Degradation level of the document a pair points at. Total by the
    /// referential-integrity invariant.
    pub fn level_of(&self, doc_id: &str) -> Option<u8> {
        self.doc(doc_id).map(|d| d.level)
    }

    /// Question counts per level: the weights of the question-weighted totals.
    pub fn question_counts_by_level(&self) -> BTreeMap<u8, usize> {
        let mut counts = BTreeMap::new();
        for pair in &self.qa_pairs {
            if let Some(level) = self.level_of(&pair.doc_id) {
                *counts.entry(level).or_insert(0) += 1;
            }
        }
        counts
    }
}

/// One degradation level's share of a corpus.
#[derive(Debug)]
pub struct LevelBucket<'a> {
    pub documents: Vec<&'a DocumentRecord>,
    pub qa_pairs: Vec<&'a QAPair>,
}

/// Partitions a corpus by degradation level. Each document lands in exactly
/// one bucket and each pair follows its document; only levels actually
/// present in the corpus appear as keys.
pub fn segment_by_level(corpus: &Corpus) -> BTreeMap<u8, LevelBucket<'_>> {
    let mut buckets: BTreeMap<u8, LevelBucket<'_>> = BTreeMap::new();
    for doc in corpus.documents() {
        buckets
            .entry(doc.level)
            .or_insert_with(|| LevelBucket {
                documents: Vec::new(),
                qa_pairs: Vec::new(),
            })
            .documents
            .push(doc);
    }
    for pair in corpus.qa_pairs() {
        let level = corpus
            .level_of(&pair.doc_id)
            .expect("corpus invariant: qa pair resolves");
        buckets
            .get_mut(&level)
            .expect("bucket exists for document level")
            .qa_pairs
            .push(pair);
    }
    buckets
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DocWire {
    kind: String,
    doc_id: String,
    level: u8,
    channels: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    chunks: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    features: Option<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QaWire {
    kind: String,
    doc_id: String,
    question: String,
    answer: String,
}

#[derive(Debug)]
enum Record {
    Doc(DocumentRecord),
    Qa(QAPair),
}

fn parse_line(line_no: usize, line: &str) -> Result<Record, CorpusError> {
    let malformed = |message: String| CorpusError::Malformed {
        line: line_no,
        message,
    };
    if line.trim().is_empty() {
        return Err(malformed("blank line".into()));
    }
    let value: serde_json::Value =
        serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
    let kind = value
        .get("kind")
        .and_then(|k| k.as_str())
        .ok_or_else(|| malformed("missing string field `kind`".into()))?;
    match kind {
        "doc" => {
            let wire: DocWire =
                serde_json::from_value(value.clone()).map_err(|e| malformed(e.to_string()))?;
            Ok(Record::Doc(DocumentRecord {
                doc_id: wire.doc_id,
                level: wire.level,
                channels: wire.channels,
                chunks: wire.chunks,
                features: wire.features,
            }))
        }
        "qa" => {
            let wire: QaWire =
                serde_json::from_value(value.clone()).map_err(|e| malformed(e.to_string()))?;
            Ok(Record::Qa(QAPair {
                doc_id: wire.doc_id,
                question: wire.question,
                reference_answer: wire.answer,
            }))
        }
        other => Err(malformed(format!("unknown record kind `{other}`"))),
    }
}

/// Reads and validates a corpus file. Any malformed line is an error naming
/// the 1-based line number; structural violations (duplicate ids, dangling
/// references, bad levels) fail with the offending identifier.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut documents = Vec::new();
    let mut qa_pairs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        match parse_line(i + 1, &line)? {
            Record::Doc(doc) => documents.push(doc),
            Record::Qa(pair) => qa_pairs.push(pair),
        }
    }
    Corpus::new(documents, qa_pairs)
}

/// Writes a corpus in the line-record format: documents first, then pairs,
/// both in stored order. `load_corpus` of the result reproduces the input.
pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let io_err = |source: std::io::Error| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut out = BufWriter::new(file);
    for doc in corpus.documents() {
        let wire = DocWire {
            kind: "doc".into(),
            doc_id: doc.doc_id.clone(),
            level: doc.level,
            channels: doc.channels.clone(),
            chunks: doc.chunks.clone(),
            features: doc.features.clone(),
        };
        let line = serde_json::to_string(&wire).expect("document records serialize");
        writeln!(out, "{line}").map_err(io_err)?;
    }
    for pair in corpus.qa_pairs() {
        let wire = QaWire {
            kind: "qa".into(),
            doc_id: pair.doc_id.clone(),
            question: pair.question.clone(),
            answer: pair.reference_answer.clone(),
        };
        let line = serde_json::to_string(&wire).expect("qa records serialize");
        writeln!(out, "{line}").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// Machine-readable validation finding.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Finding {
    /// 1-based corpus line, when attributable to a single line.
    pub line: Option<usize>,
    pub code: FindingCode,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FindingCode {
    MalformedLine,
    EmptyDocId,
    DuplicateDocId,
    InvalidLevel,
    NoChannels,
    EmptyChannel,
    EmptyChunkList,
    EmptyChunk,
    DanglingQaRef,
    EmptyQuestion,
    EmptyAnswer,
}

impl fmt::Display for FindingCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FindingCode::MalformedLine => "malformed-line",
            FindingCode::EmptyDocId => "empty-doc-id",
            FindingCode::DuplicateDocId => "duplicate-doc-id",
            FindingCode::InvalidLevel => "invalid-level",
            FindingCode::NoChannels => "no-channels",
            FindingCode::EmptyChannel => "empty-channel",
            FindingCode::EmptyChunkList => "empty-chunk-list",
            FindingCode::EmptyChunk => "empty-chunk",
            FindingCode::DanglingQaRef => "dangling-qa-ref",
            FindingCode::EmptyQuestion => "empty-question",
            FindingCode::EmptyAnswer => "empty-answer",
        };
        f.write_str(s)
    }
}

/// Lenient full-file scan for `validate`: where `load_corpus` stops at the
/// first problem, this keeps going and reports every violation it can
/// attribute, including data smells that are not load errors (documents
/// without channels, channels holding empty text).
pub fn collect_findings(path: impl AsRef<Path>) -> Result<Vec<Finding>, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = BufReader::new(file);

    let mut findings = Vec::new();
    let mut docs: Vec<(usize, DocumentRecord)> = Vec::new();
    let mut pairs: Vec<(usize, QAPair)> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        match parse_line(line_no, &line) {
            Ok(Record::Doc(doc)) => docs.push((line_no, doc)),
            Ok(Record::Qa(pair)) => pairs.push((line_no, pair)),
            Err(e) => findings.push(Finding {
                line: Some(line_no),
                code: FindingCode::MalformedLine,
                message: e.to_string(),
            }),
        }
    }

    let mut seen = BTreeSet::new();
    for (line, doc) in &docs {
        let at = Some(*line);
        if doc.doc_id.is_empty() {
            findings.push(Finding {
                line: at,
                code: FindingCode::EmptyDocId,
                message: "document with empty doc_id".into(),
            });
        } else if !seen.insert(doc.doc_id.clone()) {
            findings.push(Finding {
                line: at,
                code: FindingCode::DuplicateDocId,
                message: format!("duplicate doc_id `{}`", doc.doc_id),
            });
        }
        if doc.level > 3 {
            findings.push(Finding {
                line: at,
                code: FindingCode::InvalidLevel,
                message: format!(
                    "doc `{}`: degradation level {} outside 0..=3",
                    doc.doc_id, doc.level
                ),
            });
        }
        if doc.channels.is_empty() {
            findings.push(Finding {
                line: at,
                code: FindingCode::NoChannels,
                message: format!("doc `{}` has no channels", doc.doc_id),
            });
        }
        for (name, text) in &doc.channels {
            if text.trim().is_empty() {
                findings.push(Finding {
                    line: at,
                    code: FindingCode::EmptyChannel,
                    message: format!("doc `{}`: channel `{}` is empty", doc.doc_id, name),
                });
            }
        }
        match &doc.chunks {
            Some(chunks) if chunks.is_empty() => findings.push(Finding {
                line: at,
                code: FindingCode::EmptyChunkList,
                message: format!("doc `{}`: chunks present but empty", doc.doc_id),
            }),
            Some(chunks) => {
                for (idx, chunk) in chunks.iter().enumerate() {
                    if chunk.trim().is_empty() {
                        findings.push(Finding {
                            line: at,
                            code: FindingCode::EmptyChunk,
                            message: format!("doc `{}`: chunk {} is empty", doc.doc_id, idx),
                        });
                    }
                }
            }
            None => {}
        }
    }

    let known: BTreeSet<&str> = docs
        .iter()
        .filter(|(_, d)| !d.doc_id.is_empty())
        .map(|(_, d)| d.doc_id.as_str())
        .collect();
    for (qa_index, (line, pair)) in pairs.iter().enumerate() {
        let at = Some(*line);
        let query_id = qa_query_id(qa_index);
        if pair.question.trim().is_empty() {
            findings.push(Finding {
                line: at,
                code: FindingCode::EmptyQuestion,
                message: format!("qa pair {query_id}: question is empty"),
            });
        }
        if pair.reference_answer.trim().is_empty() {
            findings.push(Finding {
                line: at,
                code: FindingCode::EmptyAnswer,
                message: format!("qa pair {query_id}: answer is empty"),
            });
        }
        if !known.contains(pair.doc_id.as_str()) {
            findings.push(Finding {
                line: at,
                code: FindingCode::DanglingQaRef,
                message: format!(
                    "qa pair {query_id} references unknown doc `{}`",
                    pair.doc_id
                ),
            });
        }
    }

    Ok(findings)
}
