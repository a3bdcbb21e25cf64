//! Experiment configuration: strict TOML (unknown keys rejected), dotted-key
//! overrides from the command line, and provider specs that validate before
//! anything touches the network.
//!
//! Provider specs are flat structs with a `kind` discriminator instead of
//! tagged enums: serde cannot combine `deny_unknown_fields` with internally
//! tagged enums, and rejecting typos in config files matters more here than
//! enum ergonomics.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::{
    DeterministicEmbedder, EmbeddingProvider, RemoteEmbedder, RemoteEmbedderConfig,
};
use crate::fnv::fnv1a64;
use crate::qa_gen::{
    ExtractiveGenerator, GenerationProvider, MockGenerator, RemoteGenerator,
    RemoteGeneratorConfig,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config: {message}")]
    Invalid { message: String },
    #[error("override `{key}`: {message}")]
    Override { key: String, message: String },
}

fn invalid(message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Corpus file, one JSON record per line.
    pub corpus: PathBuf,
    /// Retrieval depth; metrics are reported at this cutoff.
    #[serde(default = "default_k")]
    pub k: usize,
    /// Echoed into reports and checkpoints so reruns are attributable.
    #[serde(default)]
    pub seed: u64,
    /// Worker threads for query evaluation. Scripted sequence generators
    /// are only deterministic with 1.
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// Where report artifacts, index snapshots, and checkpoints land.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    pub arms: Vec<ArmConfig>,
    /// Generation provider, required when semantic evaluation is on.
    #[serde(default)]
    pub generation: Option<GenProviderSpec>,
    #[serde(default)]
    pub semantic: SemanticConfig,
    #[serde(default)]
    pub profiling: ProfilingConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub prompts: PromptConfig,
    #[serde(default)]
    pub qa_generation: QaGenConfig,
}

fn default_k() -> usize {
    5
}

fn default_workers() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexKind {
    Dense,
    Late,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LateScoring {
    /// One query vector; score is its best match across document vectors.
    #[default]
    Max,
    /// One query vector per whitespace token; scores are summed best
    /// matches.
    SumMax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmConfig {
    pub name: String,
    pub index: IndexKind,
    /// Which text rendition of each document this arm retrieves over.
    pub channel: String,
    /// Embed per-chunk (late index only) instead of whole-document.
    #[serde(default)]
    pub chunking: bool,
    #[serde(default)]
    pub late_scoring: LateScoring,
    pub doc_embedder: EmbedProviderSpec,
    pub query_embedder: EmbedProviderSpec,
    /// Upstream page-decoding cost to fold into efficiency reporting, for
    /// channels that were produced by an OCR pass.
    #[serde(default)]
    pub ocr_time_per_doc_s: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedKind {
    Deterministic,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbedProviderSpec {
    pub kind: EmbedKind,
    pub dim: usize,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub timeout_s: Option<f64>,
    pub max_retries: Option<u32>,
    pub retry_backoff_ms: Option<u64>,
    pub auth_token_env: Option<String>,
}

impl EmbedProviderSpec {
    fn validate(&self, at: &str) -> Result<(), ConfigError> {
        if self.dim == 0 {
            return Err(invalid(format!("{at}: dim must be at least 1")));
        }
        match self.kind {
            EmbedKind::Deterministic => {
                for (name, set) in [
                    ("endpoint", self.endpoint.is_some()),
                    ("model", self.model.is_some()),
                    ("timeout_s", self.timeout_s.is_some()),
                    ("max_retries", self.max_retries.is_some()),
                    ("retry_backoff_ms", self.retry_backoff_ms.is_some()),
                    ("auth_token_env", self.auth_token_env.is_some()),
                ] {
                    if set {
                        return Err(invalid(format!(
                            "{at}: `{name}` does not apply to the deterministic embedder"
                        )));
                    }
                }
            }
            EmbedKind::Remote => {
                if self.endpoint.is_none() {
                    return Err(invalid(format!("{at}: remote embedder needs `endpoint`")));
                }
                if self.model.is_none() {
                    return Err(invalid(format!("{at}: remote embedder needs `model`")));
                }
            }
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Arc<dyn EmbeddingProvider>, crate::Error> {
        match self.kind {
            EmbedKind::Deterministic => Ok(Arc::new(DeterministicEmbedder::new(self.dim)?)),
            EmbedKind::Remote => {
                let mut config = RemoteEmbedderConfig::new(
                    self.endpoint.clone().expect("validated"),
                    self.model.clone().expect("validated"),
                    self.dim,
                );
                if let Some(s) = self.timeout_s {
                    config.timeout = Duration::from_secs_f64(s);
                }
                if let Some(n) = self.max_retries {
                    config.max_retries = n;
                }
                if let Some(ms) = self.retry_backoff_ms {
                    config.retry_backoff = Duration::from_millis(ms);
                }
                config.auth_token_env = self.auth_token_env.clone();
                Ok(Arc::new(RemoteEmbedder::new(config)?))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenKind {
    Mock,
    Extractive,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenProviderSpec {
    pub kind: GenKind,
    /// Script file for the mock provider.
    pub script: Option<PathBuf>,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub temperature: Option<f64>,
    pub max_tokens: Option<u32>,
    pub timeout_s: Option<f64>,
    pub max_retries: Option<u32>,
    pub retry_backoff_ms: Option<u64>,
    pub auth_token_env: Option<String>,
}

impl GenProviderSpec {
    fn remote_fields(&self) -> [(&'static str, bool); 7] {
        [
            ("endpoint", self.endpoint.is_some()),
            ("model", self.model.is_some()),
            ("temperature", self.temperature.is_some()),
            ("max_tokens", self.max_tokens.is_some()),
            ("timeout_s", self.timeout_s.is_some()),
            ("max_retries", self.max_retries.is_some()),
            ("retry_backoff_ms", self.retry_backoff_ms.is_some()),
        ]
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let at = "generation";
        match self.kind {
            GenKind::Mock => {
                if self.script.is_none() {
                    return Err(invalid(format!("{at}: mock generator needs `script`")));
                }
                for (name, set) in self.remote_fields() {
                    if set {
                        return Err(invalid(format!(
                            "{at}: `{name}` does not apply to the mock generator"
                        )));
                    }
                }
            }
            GenKind::Extractive => {
                if self.script.is_some() {
                    return Err(invalid(format!(
                        "{at}: `script` does not apply to the extractive generator"
                    )));
                }
                for (name, set) in self.remote_fields() {
                    if set {
                        return Err(invalid(format!(
                            "{at}: `{name}` does not apply to the extractive generator"
                        )));
                    }
                }
            }
            GenKind::Remote => {
                if self.script.is_some() {
                    return Err(invalid(format!(
                        "{at}: `script` does not apply to the remote generator"
                    )));
                }
                if self.endpoint.is_none() {
                    return Err(invalid(format!("{at}: remote generator needs `endpoint`")));
                }
                if self.model.is_none() {
                    return Err(invalid(format!("{at}: remote generator needs `model`")));
                }
            }
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Arc<dyn GenerationProvider>, crate::Error> {
        match self.kind {
            GenKind::Mock => {
                let path = self.script.as_deref().expect("validated");
                Ok(Arc::new(MockGenerator::from_script_file(path)?))
            }
            GenKind::Extractive => Ok(Arc::new(ExtractiveGenerator)),
            GenKind::Remote => {
                let mut config = RemoteGeneratorConfig::new(
                    self.endpoint.clone().expect("validated"),
                    self.model.clone().expect("validated"),
                );
                if let Some(t) = self.temperature {
                    config.temperature = t;
                }
                if let Some(n) = self.max_tokens {
                    config.max_tokens = n;
                }
                if let Some(s) = self.timeout_s {
                    config.timeout = Duration::from_secs_f64(s);
                }
                if let Some(n) = self.max_retries {
                    config.max_retries = n;
                }
                if let Some(ms) = self.retry_backoff_ms {
                    config.retry_backoff = Duration::from_millis(ms);
                }
                config.auth_token_env = self.auth_token_env.clone();
                Ok(Arc::new(RemoteGenerator::new(config)?))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemanticConfig {
    /// Generate answers and score them against references.
    #[serde(default)]
    pub enabled: bool,
    /// Whitespace-token cap on retrieved context fed to the generator.
    #[serde(default)]
    pub context_token_budget: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfilingConfig {
    /// Measure per-arm embedding/retrieval cost and index footprint.
    #[serde(default)]
    pub enabled: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Stamp wall-clock times into the report. Off makes reruns
    /// byte-identical.
    #[serde(default = "default_true")]
    pub timestamps: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { timestamps: true }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PromptConfig {
    /// Replacement for the embedded pair-generation template.
    #[serde(default)]
    pub qa_template: Option<PathBuf>,
    /// Replacement for the embedded answer template.
    #[serde(default)]
    pub answer_template: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QaGenConfig {
    /// Pairs requested per document.
    #[serde(default = "default_per_doc")]
    pub per_doc: usize,
    /// Channel the pair generator reads.
    #[serde(default = "default_channel")]
    pub channel: String,
    /// Extra asks allowed when deduplication leaves a shortfall.
    #[serde(default = "default_max_reasks")]
    pub max_reasks: u32,
}

impl Default for QaGenConfig {
    fn default() -> Self {
        QaGenConfig {
            per_doc: default_per_doc(),
            channel: default_channel(),
            max_reasks: default_max_reasks(),
        }
    }
}

fn default_per_doc() -> usize {
    10
}

fn default_channel() -> String {
    "native".to_string()
}

fn default_max_reasks() -> u32 {
    3
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.k == 0 {
            return Err(invalid("k must be at least 1"));
        }
        if self.workers == 0 {
            return Err(invalid("workers must be at least 1"));
        }
        if self.arms.is_empty() {
            return Err(invalid("at least one arm is required"));
        }
        let mut names = std::collections::BTreeSet::new();
        for arm in &self.arms {
            if arm.name.trim().is_empty() {
                return Err(invalid("arm names must be non-empty"));
            }
            if !names.insert(arm.name.as_str()) {
                return Err(invalid(format!("duplicate arm name `{}`", arm.name)));
            }
            let at = format!("arm `{}`", arm.name);
            if arm.channel.trim().is_empty() {
                return Err(invalid(format!("{at}: channel must be non-empty")));
            }
            if arm.chunking && arm.index != IndexKind::Late {
                return Err(invalid(format!(
                    "{at}: chunking requires a late-interaction index"
                )));
            }
            if arm.late_scoring == LateScoring::SumMax && arm.index != IndexKind::Late {
                return Err(invalid(format!(
                    "{at}: sum_max scoring requires a late-interaction index"
                )));
            }
            arm.doc_embedder.validate(&format!("{at} doc_embedder"))?;
            arm.query_embedder
                .validate(&format!("{at} query_embedder"))?;
            if arm.doc_embedder.dim != arm.query_embedder.dim {
                return Err(invalid(format!(
                    "{at}: doc embedder dim {} != query embedder dim {}",
                    arm.doc_embedder.dim, arm.query_embedder.dim
                )));
            }
            if let Some(s) = arm.ocr_time_per_doc_s {
                if !s.is_finite() || s < 0.0 {
                    return Err(invalid(format!(
                        "{at}: ocr_time_per_doc_s must be finite and non-negative"
                    )));
                }
            }
        }
        if self.semantic.enabled && self.generation.is_none() {
            return Err(invalid(
                "semantic evaluation needs a [generation] provider",
            ));
        }
        if let Some(generation) = &self.generation {
            generation.validate()?;
        }
        if self.qa_generation.per_doc == 0 {
            return Err(invalid("qa_generation.per_doc must be at least 1"));
        }
        if self.qa_generation.channel.trim().is_empty() {
            return Err(invalid("qa_generation.channel must be non-empty"));
        }
        Ok(())
    }

    /// Stable hash of the effective config; checkpoints from a different
    /// configuration are ignored rather than resumed.
    pub fn fingerprint(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        format!("{:016x}", fnv1a64(&bytes))
    }
}

/// Parses a scalar the way TOML would: bool, then integer, then float, then
/// string.
fn parse_scalar(raw: &str) -> toml::Value {
    if let Ok(b) = raw.parse::<bool>() {
        return toml::Value::Boolean(b);
    }
    if let Ok(i) = raw.parse::<i64>() {
        return toml::Value::Integer(i);
    }
    if let Ok(f) = raw.parse::<f64>() {
        return toml::Value::Float(f);
    }
    toml::Value::String(raw.to_string())
}

/// Applies one `dotted.key=value` override to the parsed TOML tree. Missing
/// intermediate tables are created; array steps must name an existing index.
fn apply_override(root: &mut toml::Value, key: &str, raw: &str) -> Result<(), ConfigError> {
    let err = |message: String| ConfigError::Override {
        key: key.to_string(),
        message,
    };
    let segments: Vec<&str> = key.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(err("empty path segment".to_string()));
    }
    let mut current = root;
    for (i, segment) in segments.iter().enumerate() {
        let last = i + 1 == segments.len();
        match current {
            toml::Value::Table(table) => {
                if last {
                    table.insert(segment.to_string(), parse_scalar(raw));
                    return Ok(());
                }
                current = table
                    .entry(segment.to_string())
                    .or_insert_with(|| toml::Value::Table(toml::map::Map::new()));
            }
            toml::Value::Array(items) => {
                let index: usize = segment
                    .parse()
                    .map_err(|_| err(format!("`{segment}` is not an array index")))?;
                let len = items.len();
                let slot = items
                    .get_mut(index)
                    .ok_or_else(|| err(format!("index {index} out of bounds (len {len})")))?;
                if last {
                    *slot = parse_scalar(raw);
                    return Ok(());
                }
                current = slot;
            }
            other => {
                return Err(err(format!(
                    "`{segment}` cannot descend into a {}",
                    other.type_str()
                )));
            }
        }
    }
    unreachable!("loop returns on the last segment");
}

/// Loads, overrides, and validates an experiment config. Overrides are
/// `(dotted.key, value)` pairs applied to the raw TOML before typed
/// deserialization, so they face the same unknown-key rejection as the file.
pub fn load_config(
    path: &Path,
    overrides: &[(String, String)],
) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut value: toml::Value = toml::from_str(&text).map_err(|e| ConfigError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    for (key, raw) in overrides {
        apply_override(&mut value, key, raw)?;
    }
    let config: ExperimentConfig = value.try_into().map_err(|e| ConfigError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
corpus = "corpus.jsonl"

[[arms]]
name = "dense"
index = "dense"
channel = "native"

[arms.doc_embedder]
kind = "deterministic"
dim = 64

[arms.query_embedder]
kind = "deterministic"
dim = 64
"#;

    fn write_config(dir: &tempfile::TempDir, text: &str) -> PathBuf {
        let path = dir.path().join("config.toml");
        std::fs::write(&path, text).unwrap();
        path
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let config = load_config(&write_config(&dir, MINIMAL), &[]).unwrap();
        assert_eq!(config.k, 5);
        assert_eq!(config.workers, 1);
        assert_eq!(config.seed, 0);
        assert!(config.output.timestamps);
        assert!(!config.semantic.enabled);
        assert_eq!(config.arms[0].late_scoring, LateScoring::Max);
        assert!(!config.arms[0].chunking);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let text = format!("{MINIMAL}\nturbo = true\n");
        let err = load_config(&write_config(&dir, text.as_str()), &[]).unwrap_err();
        match err {
            ConfigError::Parse { message, .. } => assert!(message.contains("turbo")),
            other => panic!("unexpected error: {other:?}"),
        }
    }

    #[test]
    fn override_changes_k_and_nested_arm_field() {
        let dir = tempfile::tempdir().unwrap();
        let overrides = vec![
            ("k".to_string(), "1".to_string()),
            ("arms.0.channel".to_string(), "ocr".to_string()),
            ("semantic.context_token_budget".to_string(), "64".to_string()),
        ];
        let config = load_config(&write_config(&dir, MINIMAL), &overrides).unwrap();
        assert_eq!(config.k, 1);
        assert_eq!(config.arms[0].channel, "ocr");
        assert_eq!(config.semantic.context_token_budget, Some(64));
    }

    #[test]
    fn override_of_unknown_key_is_rejected_like_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let overrides = vec![("turbo".to_string(), "true".to_string())];
        let err = load_config(&write_config(&dir, MINIMAL), &overrides).unwrap_err();
        assert!(matches!(err, ConfigError::Parse { .. }));
    }

    #[test]
    fn override_array_index_out_of_bounds() {
        let dir = tempfile::tempdir().unwrap();
        let overrides = vec![("arms.3.name".to_string(), "x".to_string())];
        let err = load_config(&write_config(&dir, MINIMAL), &overrides).unwrap_err();
        assert!(matches!(err, ConfigError::Override { .. }));
    }

    #[test]
    fn chunking_on_dense_index_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let overrides = vec![("arms.0.chunking".to_string(), "true".to_string())];
        let err = load_config(&write_config(&dir, MINIMAL), &overrides).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { message } if message.contains("chunking")));
    }

    #[test]
    fn sum_max_on_dense_index_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let overrides = vec![("arms.0.late_scoring".to_string(), "sum_max".to_string())];
        let err = load_config(&write_config(&dir, MINIMAL), &overrides).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { message } if message.contains("sum_max")));
    }

    #[test]
    fn mismatched_embedder_dims_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let overrides = vec![("arms.0.query_embedder.dim".to_string(), "32".to_string())];
        let err = load_config(&write_config(&dir, MINIMAL), &overrides).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { message } if message.contains("dim")));
    }

    #[test]
    fn deterministic_embedder_rejects_remote_fields() {
        let dir = tempfile::tempdir().unwrap();
        let overrides = vec![(
            "arms.0.doc_embedder.endpoint".to_string(),
            "http://x".to_string(),
        )];
        let err = load_config(&write_config(&dir, MINIMAL), &overrides).unwrap_err();
        assert!(
            matches!(err, ConfigError::Invalid { message } if message.contains("endpoint"))
        );
    }

    #[test]
    fn semantic_without_generation_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let overrides = vec![("semantic.enabled".to_string(), "true".to_string())];
        let err = load_config(&write_config(&dir, MINIMAL), &overrides).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { message } if message.contains("generation")));
    }

    #[test]
    fn duplicate_arm_names_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let text = format!(
            "{MINIMAL}
[[arms]]
name = \"dense\"
index = \"dense\"
channel = \"native\"

[arms.doc_embedder]
kind = \"deterministic\"
dim = 64

[arms.query_embedder]
kind = \"deterministic\"
dim = 64
"
        );
        let err = load_config(&write_config(&dir, &text), &[]).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { message } if message.contains("duplicate")));
    }

    #[test]
    fn fingerprint_tracks_effective_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_config(&dir, MINIMAL);
        let base = load_config(&path, &[]).unwrap();
        let same = load_config(&path, &[]).unwrap();
        assert_eq!(base.fingerprint(), same.fingerprint());
        let overridden =
            load_config(&path, &[("k".to_string(), "3".to_string())]).unwrap();
        assert_ne!(base.fingerprint(), overridden.fingerprint());
    }

    #[test]
    fn generation_spec_kind_rules() {
        let dir = tempfile::tempdir().unwrap();
        let text = format!(
            "{MINIMAL}
[generation]
kind = \"extractive\"
script = \"script.json\"
"
        );
        let err = load_config(&write_config(&dir, &text), &[]).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { message } if message.contains("script")));

        let text = format!(
            "{MINIMAL}
[generation]
kind = \"remote\"
model = \"gen-1\"
"
        );
        let err = load_config(&write_config(&dir, &text), &[]).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { message } if message.contains("endpoint")));
    }
}
