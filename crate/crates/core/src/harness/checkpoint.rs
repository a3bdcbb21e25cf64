//! Failure recovery for experiment runs.
//!
//! When a provider dies mid-run, everything already evaluated is written
//! here (plus the name of each arm's index snapshot), so the retried run
//! redoes only the remainder. A checkpoint from a different effective config
//! is ignored, never merged.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::metrics::retrieval::RetrievalJudgment;
use crate::qa_gen::GeneratedAnswer;

pub const CHECKPOINT_FILE: &str = "checkpoint.json";
const SCHEMA_VERSION: u32 = 1;

/// Everything the run needs to never re-evaluate this query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryOutcome {
    pub judgment: RetrievalJudgment,
    pub answer: Option<GeneratedAnswer>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema_version: u32,
    pub config_fingerprint: String,
    /// Arm name, then query id.
    pub outcomes: BTreeMap<String, BTreeMap<String, QueryOutcome>>,
    /// Arm name to snapshot file name inside the output directory.
    pub index_files: BTreeMap<String, String>,
}

impl Checkpoint {
    pub fn new(config_fingerprint: String) -> Self {
        Checkpoint {
            schema_version: SCHEMA_VERSION,
            config_fingerprint,
            outcomes: BTreeMap::new(),
            index_files: BTreeMap::new(),
        }
    }

    pub fn path_in(dir: &Path) -> PathBuf {
        dir.join(CHECKPOINT_FILE)
    }

    /// Loads the checkpoint for this exact config, if one is usable. Any
    /// mismatch (missing, unreadable, wrong version, other fingerprint)
    /// degrades to a fresh start with a warning, never an error.
    pub fn load(dir: &Path, fingerprint: &str) -> Option<Checkpoint> {
        let path = Checkpoint::path_in(dir);
        if !path.exists() {
            return None;
        }
        let text = match std::fs::read_to_string(&path) {
            Ok(text) => text,
            Err(e) => {
                log::warn!("ignoring unreadable checkpoint {}: {e}", path.display());
                return None;
            }
        };
        let checkpoint: Checkpoint = match serde_json::from_str(&text) {
            Ok(c) => c,
            Err(e) => {
                log::warn!("ignoring corrupt checkpoint {}: {e}", path.display());
                return None;
            }
        };
        if checkpoint.schema_version != SCHEMA_VERSION {
            log::warn!(
                "ignoring checkpoint with schema version {}",
                checkpoint.schema_version
            );
            return None;
        }
        if checkpoint.config_fingerprint != fingerprint {
            log::warn!("ignoring checkpoint from a different configuration");
            return None;
        }
        let done: usize = checkpoint.outcomes.values().map(|m| m.len()).sum();
        log::info!("resuming from checkpoint: {done} query outcome(s) already evaluated");
        Some(checkpoint)
    }

    /// Write-then-rename so a crash mid-save cannot leave a torn file.
    pub fn save(&self, dir: &Path) -> std::io::Result<()> {
        let tmp = dir.join(format!("{CHECKPOINT_FILE}.tmp"));
        let mut text = serde_json::to_string_pretty(self).expect("checkpoint serializes");
        text.push('\n');
        std::fs::write(&tmp, text)?;
        std::fs::rename(&tmp, Checkpoint::path_in(dir))
    }

    pub fn remove(dir: &Path) {
        let path = Checkpoint::path_in(dir);
        if path.exists() {
            if let Err(e) = std::fs::remove_file(&path) {
                log::warn!("could not remove checkpoint {}: {e}", path.display());
            }
        }
    }
}
