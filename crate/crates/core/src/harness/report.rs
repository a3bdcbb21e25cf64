//! The evaluation report: a single JSON artifact plus text and CSV views.
//!
//! Retrieval and semantic tables are broken out per degradation level and
//! totaled, so quality cliffs between clean and damaged inputs are visible
//! instead of averaged away.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::ExperimentConfig;
use super::profile::EfficiencyStats;
use super::radar::RadarScores;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

pub const REPORT_FILE: &str = "report.json";
pub const RETRIEVAL_CSV: &str = "retrieval.csv";
pub const SEMANTIC_CSV: &str = "semantic.csv";
pub const RADAR_CSV: &str = "radar.csv";
const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrievalRow {
    pub questions: usize,
    pub mrr: f64,
    /// Recall at the run's k (the cutoff is in the config echo).
    pub recall: f64,
    pub ndcg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemanticRow {
    pub questions: usize,
    pub exact_match: f64,
    pub bleu: f64,
    pub rouge_1: f64,
    pub rouge_l: f64,
}

/// Per-degradation-level rows plus the all-levels total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table<R> {
    pub per_level: BTreeMap<u8, R>,
    pub total: R,
}

/// How often answer generation ran against degenerate context.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerFlags {
    pub no_context: usize,
    pub truncated_context: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmReport {
    pub name: String,
    pub retrieval: Table<RetrievalRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub semantic: Option<Table<SemanticRow>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub efficiency: Option<EfficiencyStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer_flags: Option<AnswerFlags>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timestamps {
    pub started_unix_s: u64,
    pub finished_unix_s: u64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    /// The effective configuration (file plus overrides) that produced this.
    pub config: ExperimentConfig,
    pub question_counts: BTreeMap<u8, usize>,
    pub total_questions: usize,
    pub arms: Vec<ArmReport>,
    pub radar: Vec<RadarScores>,
    pub radar_warnings: Vec<String>,
    /// Absent when the config disables timestamps to keep reruns
    /// byte-identical.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamps: Option<Timestamps>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }
}

pub fn load_report(path: &Path) -> Result<EvalReport, ReportError> {
    let text = std::fs::read_to_string(path).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let report: EvalReport = serde_json::from_str(&text).map_err(|e| ReportError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    if report.schema_version != SCHEMA_VERSION {
        return Err(ReportError::Parse {
            path: path.to_path_buf(),
            message: format!(
                "unsupported report schema version {}",
                report.schema_version
            ),
        });
    }
    Ok(report)
}

/// Pads cells so each column is as wide as its widest cell. First row is the
/// header.
fn render_columns(rows: &[Vec<String>], indent: &str) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let mut widths = vec![0usize; cols];
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    for row in rows {
        out.push_str(indent);
        for (i, cell) in row.iter().enumerate() {
            if i + 1 == row.len() {
                out.push_str(cell);
            } else {
                out.push_str(&format!("{cell:<width$}  ", width = widths[i]));
            }
        }
        // Padding never trails the final column, but guard anyway.
        while out.ends_with(' ') {
            out.pop();
        }
        out.push('\n');
    }
    out
}

fn fmt4(v: f64) -> String {
    format!("{v:.4}")
}

fn opt4(v: Option<f64>) -> String {
    v.map(fmt4).unwrap_or_else(|| "-".to_string())
}

/// Human-readable rendering of the whole report.
pub fn render_text(report: &EvalReport) -> String {
    let k = report.config.k;
    let mut out = String::new();
    let levels: Vec<String> = report
        .question_counts
        .keys()
        .map(|l| l.to_string())
        .collect();
    out.push_str(&format!(
        "evaluation report: k={k}, {} question(s), level(s) {}\n",
        report.total_questions,
        levels.join(",")
    ));

    for arm in &report.arms {
        out.push_str(&format!("\narm `{}`\n", arm.name));
        let mut rows = vec![vec![
            "level".to_string(),
            "questions".to_string(),
            "mrr".to_string(),
            format!("recall@{k}"),
            format!("ndcg@{k}"),
        ]];
        let retrieval_cells = |row: &RetrievalRow| {
            vec![
                row.questions.to_string(),
                fmt4(row.mrr),
                fmt4(row.recall),
                fmt4(row.ndcg),
            ]
        };
        for (level, row) in &arm.retrieval.per_level {
            let mut cells = vec![level.to_string()];
            cells.extend(retrieval_cells(row));
            rows.push(cells);
        }
        let mut cells = vec!["total".to_string()];
        cells.extend(retrieval_cells(&arm.retrieval.total));
        rows.push(cells);
        out.push_str(&render_columns(&rows, "  "));

        if let Some(semantic) = &arm.semantic {
            out.push_str("\n  answer quality\n");
            let mut rows = vec![vec![
                "level".to_string(),
                "questions".to_string(),
                "exact_match".to_string(),
                "bleu".to_string(),
                "rouge_1".to_string(),
                "rouge_l".to_string(),
            ]];
            let semantic_cells = |row: &SemanticRow| {
                vec![
                    row.questions.to_string(),
                    fmt4(row.exact_match),
                    fmt4(row.bleu),
                    fmt4(row.rouge_1),
                    fmt4(row.rouge_l),
                ]
            };
            for (level, row) in &semantic.per_level {
                let mut cells = vec![level.to_string()];
                cells.extend(semantic_cells(row));
                rows.push(cells);
            }
            let mut cells = vec!["total".to_string()];
            cells.extend(semantic_cells(&semantic.total));
            rows.push(cells);
            out.push_str(&render_columns(&rows, "  "));
        }

        if let Some(flags) = &arm.answer_flags {
            out.push_str(&format!(
                "  answers with no context: {}, with truncated context: {}\n",
                flags.no_context, flags.truncated_context
            ));
        }

        if let Some(eff) = &arm.efficiency {
            out.push_str("\n  efficiency\n");
            out.push_str(&format!(
                "    {} doc(s), {} query(ies), {} embed call(s)\n",
                eff.docs, eff.queries, eff.embed_calls
            ));
            out.push_str(&format!(
                "    embedding      {:.6} s/doc (stddev {:.6})\n",
                eff.embedding_time_per_doc_s, eff.embedding_time_stddev_s
            ));
            out.push_str(&format!(
                "    query embed    {:.6} s/query\n",
                eff.query_embedding_time_per_query_s
            ));
            out.push_str(&format!(
                "    retrieval      {:.6} s/query (stddev {:.6})\n",
                eff.retrieval_latency_per_query_s, eff.retrieval_latency_stddev_s
            ));
            out.push_str(&format!(
                "    end to end     {:.6} s/query\n",
                eff.end_to_end_latency_per_query_s
            ));
            out.push_str(&format!(
                "    index          {} B on disk, {} B resident, {:.1} B per 1k docs\n",
                eff.snapshot_bytes, eff.in_memory_bytes, eff.memory_per_1k_docs_bytes
            ));
            if let Some(ocr) = eff.ocr_time_per_doc_s {
                out.push_str(&format!("    ocr            {ocr:.6} s/doc\n"));
            }
        }
    }

    out.push_str("\ncapability profile (0-10 per axis)\n");
    let mut rows = vec![vec![
        "arm".to_string(),
        "clean_retrieval".to_string(),
        "noisy_retrieval".to_string(),
        "semantic_quality".to_string(),
        "processing_speed".to_string(),
        "memory_efficiency".to_string(),
    ]];
    for scores in &report.radar {
        rows.push(vec![
            scores.arm.clone(),
            opt4(scores.clean_retrieval),
            opt4(scores.noisy_retrieval),
            opt4(scores.semantic_quality),
            opt4(scores.processing_speed),
            opt4(scores.memory_efficiency),
        ]);
    }
    out.push_str(&render_columns(&rows, "  "));
    for warning in &report.radar_warnings {
        out.push_str(&format!("  note: {warning}\n"));
    }
    out
}

/// In-memory CSV build; writing into a Vec cannot fail.
fn csv_to_string(build: impl FnOnce(&mut csv::Writer<Vec<u8>>)) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    build(&mut writer);
    let bytes = writer.into_inner().expect("in-memory csv");
    String::from_utf8(bytes).expect("csv is utf-8")
}

/// Long-format retrieval table: one row per (level, metric), one column per
/// arm.
pub fn retrieval_csv(report: &EvalReport) -> String {
    let k = report.config.k;
    csv_to_string(|w| {
        let mut header = vec![
            "level".to_string(),
            "questions".to_string(),
            "metric".to_string(),
        ];
        header.extend(report.arms.iter().map(|a| a.name.clone()));
        w.write_record(&header).expect("in-memory csv");
        let metrics: [(String, fn(&RetrievalRow) -> f64); 3] = [
            ("mrr".to_string(), |r| r.mrr),
            (format!("recall@{k}"), |r| r.recall),
            (format!("ndcg@{k}"), |r| r.ndcg),
        ];
        let mut write_rows = |label: String, questions: usize, pick: &dyn Fn(&ArmReport) -> Option<RetrievalRow>| {
            for (name, get) in &metrics {
                let mut record = vec![label.clone(), questions.to_string(), name.clone()];
                for arm in &report.arms {
                    record.push(
                        pick(arm)
                            .map(|row| get(&row).to_string())
                            .unwrap_or_default(),
                    );
                }
                w.write_record(&record).expect("in-memory csv");
            }
        };
        for (level, questions) in &report.question_counts {
            let level = *level;
            write_rows(level.to_string(), *questions, &move |arm: &ArmReport| {
                arm.retrieval.per_level.get(&level).copied()
            });
        }
        write_rows(
            "total".to_string(),
            report.total_questions,
            &|arm: &ArmReport| Some(arm.retrieval.total),
        );
    })
}

/// Long-format semantic table, or `None` when no arm ran generation.
pub fn semantic_csv(report: &EvalReport) -> Option<String> {
    if report.arms.iter().all(|a| a.semantic.is_none()) {
        return None;
    }
    Some(csv_to_string(|w| {
        let mut header = vec![
            "level".to_string(),
            "questions".to_string(),
            "metric".to_string(),
        ];
        header.extend(report.arms.iter().map(|a| a.name.clone()));
        w.write_record(&header).expect("in-memory csv");
        let metrics: [(&str, fn(&SemanticRow) -> f64); 4] = [
            ("exact_match", |r| r.exact_match),
            ("bleu", |r| r.bleu),
            ("rouge_1", |r| r.rouge_1),
            ("rouge_l", |r| r.rouge_l),
        ];
        let mut write_rows = |label: String, questions: usize, pick: &dyn Fn(&ArmReport) -> Option<SemanticRow>| {
            for (name, get) in metrics {
                let mut record = vec![label.clone(), questions.to_string(), name.to_string()];
                for arm in &report.arms {
                    record.push(
                        pick(arm)
                            .map(|row| get(&row).to_string())
                            .unwrap_or_default(),
                    );
                }
                w.write_record(&record).expect("in-memory csv");
            }
        };
        for (level, questions) in &report.question_counts {
            let level = *level;
            write_rows(level.to_string(), *questions, &move |arm: &ArmReport| {
                arm.semantic.as_ref().and_then(|t| t.per_level.get(&level)).copied()
            });
        }
        write_rows(
            "total".to_string(),
            report.total_questions,
            &|arm: &ArmReport| arm.semantic.as_ref().map(|t| t.total),
        );
    }))
}

/// Wide-format capability scores, one row per arm; unmeasured axes are empty.
pub fn radar_csv(report: &EvalReport) -> String {
    csv_to_string(|w| {
        w.write_record([
            "arm",
            "clean_retrieval",
            "noisy_retrieval",
            "semantic_quality",
            "processing_speed",
            "memory_efficiency",
        ])
        .expect("in-memory csv");
        for scores in &report.radar {
            let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            w.write_record([
                scores.arm.clone(),
                cell(scores.clean_retrieval),
                cell(scores.noisy_retrieval),
                cell(scores.semantic_quality),
                cell(scores.processing_speed),
                cell(scores.memory_efficiency),
            ])
            .expect("in-memory csv");
        }
    })
}

/// Writes report.json and the CSV views into `dir`.
pub fn write_artifacts(report: &EvalReport, dir: &Path) -> Result<(), ReportError> {
    let write = |name: &str, contents: String| {
        let path = dir.join(name);
        std::fs::write(&path, contents).map_err(|source| ReportError::Io { path, source })
    };
    write(REPORT_FILE, report.to_json())?;
    write(RETRIEVAL_CSV, retrieval_csv(report))?;
    if let Some(csv) = semantic_csv(report) {
        write(SEMANTIC_CSV, csv)?;
    }
    write(RADAR_CSV, radar_csv(report))?;
    Ok(())
}
