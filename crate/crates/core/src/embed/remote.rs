//! Client for embeddings-endpoint services speaking the de-facto convention:
//! POST {"model", "input": [text]} returning {"data": [{"embedding", "index"}]}.

use std::env;
use std::time::Duration;

use serde::Deserialize;

use crate::http;

use super::{DenseEmbedding, EmbedError, EmbeddingProvider};

#[derive(Debug, Clone)]
pub struct RemoteEmbedderConfig {
    pub endpoint: String,
    pub model: String,
    /// Declared output dimensionality; responses of any other size are errors.
    pub dim: usize,
    pub timeout: Duration,
    /// Additional attempts after the first, on transport errors and 429/5xx.
    pub max_retries: u32,
    pub retry_backoff: Duration,
    /// Name of the environment variable holding the bearer token, if the
    /// service needs one. The variable must be set at construction time.
    pub auth_token_env: Option<String>,
}

impl RemoteEmbedderConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>, dim: usize) -> Self {
        RemoteEmbedderConfig {
            endpoint: endpoint.into(),
            model: model.into(),
            dim,
            timeout: Duration::from_secs(30),
            max_retries: 3,
            retry_backoff: Duration::from_millis(250),
            auth_token_env: None,
        }
    }
}

pub struct RemoteEmbedder {
    config: RemoteEmbedderConfig,
    agent: ureq::Agent,
    token: Option<String>,
}

impl RemoteEmbedder {
    pub fn new(config: RemoteEmbedderConfig) -> Result<Self, EmbedError> {
        if config.dim == 0 {
            return Err(EmbedError::ZeroDim);
        }
        let token = match &config.auth_token_env {
            Some(var) => Some(
                env::var(var).map_err(|_| EmbedError::MissingAuthToken { var: var.clone() })?,
            ),
            None => None,
        };
        let agent = ureq::AgentBuilder::new().timeout(config.timeout).build();
        Ok(RemoteEmbedder {
            config,
            agent,
            token,
        })
    }
}

#[derive(Deserialize)]
struct EmbedResponse {
    data: Vec<EmbedDatum>,
}

#[derive(Deserialize)]
struct EmbedDatum {
    embedding: Vec<f32>,
    #[serde(default)]
    index: usize,
}

impl EmbeddingProvider for RemoteEmbedder {
    fn dim(&self) -> usize {
        self.config.dim
    }

    fn embed(&self, text: &str) -> Result<DenseEmbedding, EmbedError> {
        let body = serde_json::json!({
            "model": self.config.model,
            "input": [text],
        });
        let value = http::post_json(
            &self.agent,
            &self.config.endpoint,
            self.token.as_deref(),
            &body,
            self.config.max_retries,
            self.config.retry_backoff,
        )
        .map_err(|e| EmbedError::Provider {
            attempts: e.attempts,
            message: e.message,
        })?;
        let mut response: EmbedResponse =
            serde_json::from_value(value).map_err(|e| EmbedError::MalformedResponse {
                message: e.to_string(),
            })?;
        response.data.sort_by_key(|d| d.index);
        let datum = response
            .data
            .into_iter()
            .next()
            .ok_or_else(|| EmbedError::MalformedResponse {
                message: "empty data array".into(),
            })?;
        if datum.embedding.len() != self.config.dim {
            return Err(EmbedError::DimMismatch {
                want: self.config.dim,
                got: datum.embedding.len(),
            });
        }
        DenseEmbedding::new(datum.embedding)
    }
}
