//! Experiment orchestration: typed configuration with overrides, the
//! evaluation run itself (index per arm, retrieval, optional generation),
//! checkpoint/resume, efficiency profiling, capability-axis normalization,
//! and report assembly.

pub mod checkpoint;
pub mod config;
pub mod profile;
pub mod radar;
pub mod report;
mod runner;

pub use checkpoint::{Checkpoint, QueryOutcome, CHECKPOINT_FILE};
pub use config::{
    load_config, ArmConfig, ConfigError, EmbedProviderSpec, ExperimentConfig, GenProviderSpec,
    IndexKind, LateScoring,
};
pub use profile::{profile_efficiency, EfficiencyStats};
pub use radar::{radar_scores, RadarInputs, RadarScores};
pub use report::{
    load_report, radar_csv, render_text, retrieval_csv, semantic_csv, write_artifacts, ArmReport,
    EvalReport, ReportError, RADAR_CSV, REPORT_FILE, RETRIEVAL_CSV, SEMANTIC_CSV,
};
pub use runner::{
    build_index_for_arm, embed_corpus_for_arm, embed_query_for_arm, generate_qa_corpus,
    run_experiment, ArmComponents, IndexBuildSummary, Runner,
};
