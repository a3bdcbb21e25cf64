//! Scripted generation provider for offline and deterministic tests.

use std::path::Path;
use std::sync::Mutex;

use serde::Deserialize;

use super::{ChatMessage, GenError, GenerationProvider};

enum Script {
    /// Responses replayed in order. Position depends on call order, so
    /// sequence scripts require a single-worker engine.
    Sequence { responses: Vec<String>, cursor: usize },
    /// (pattern, response) pairs; the first pattern contained in the last
    /// message wins. Safe under concurrency.
    Keyed(Vec<(String, String)>),
}

pub struct MockGenerator {
    script: Mutex<Script>,
    served: std::sync::atomic::AtomicUsize,
}

/// On-disk script: `{"sequence": [...]}` or `{"keyed": [["pat","resp"], ...]}`.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScriptFile {
    sequence: Option<Vec<String>>,
    keyed: Option<Vec<(String, String)>>,
}

impl MockGenerator {
    pub fn sequence<I, S>(responses: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        MockGenerator {
            script: Mutex::new(Script::Sequence {
                responses: responses.into_iter().map(Into::into).collect(),
                cursor: 0,
            }),
            served: std::sync::atomic::AtomicUsize::new(0),
        }
    }

    pub fn keyed(patterns: Vec<(String, String)>) -> Self {
        MockGenerator {
            script: Mutex::new(Script::Keyed(patterns)),
            served: std::sync::atomic::AtomicUsize::new(0),
        }
    }

    pub fn from_script_file(path: &Path) -> Result<Self, GenError> {
        let bad = |message: String| GenError::BadScript {
            path: path.to_path_buf(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
        let file: ScriptFile =
            serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
        match (file.sequence, file.keyed) {
            (Some(responses), None) => Ok(MockGenerator::sequence(responses)),
            (None, Some(patterns)) => Ok(MockGenerator::keyed(patterns)),
            _ => Err(bad(
                "script must define exactly one of `sequence` or `keyed`".to_string(),
            )),
        }
    }

    /// Completions served so far.
    pub fn served(&self) -> usize {
        self.served.load(std::sync::atomic::Ordering::SeqCst)
    }
}

impl GenerationProvider for MockGenerator {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, GenError> {
        let mut script = self.script.lock().expect("mock script lock");
        let response = match &mut *script {
            Script::Sequence { responses, cursor } => {
                let response = responses.get(*cursor).cloned().ok_or(
                    GenError::ScriptExhausted {
                        served: self.served(),
                    },
                )?;
                *cursor += 1;
                response
            }
            Script::Keyed(patterns) => {
                let prompt = messages.last().map(|m| m.content.as_str()).unwrap_or("");
                patterns
                    .iter()
                    .find(|(pattern, _)| prompt.contains(pattern))
                    .map(|(_, response)| response.clone())
                    .ok_or(GenError::NoScriptedResponse)?
            }
        };
        self.served
            .fetch_add(1, std::sync::atomic::Ordering::SeqCst);
        Ok(response)
    }
}
