//! Chat-completions client for generation.
//!
//! Request: `POST {endpoint}` with `{"model", "messages": [{role, content}],
//! "temperature", "max_tokens"}`. Response: the assistant text at
//! `choices[0].message.content`.

use std::time::Duration;

use serde::Deserialize;

use super::{ChatMessage, GenError, GenerationProvider};
use crate::http::post_json;

#[derive(Debug, Clone)]
pub struct RemoteGeneratorConfig {
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout: Duration,
    pub max_retries: u32,
    pub retry_backoff: Duration,
    /// Environment variable holding the bearer token, when the service
    /// requires one.
    pub auth_token_env: Option<String>,
}

impl RemoteGeneratorConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        RemoteGeneratorConfig {
            endpoint: endpoint.into(),
            model: model.into(),
            temperature: 0.0,
            max_tokens: 256,
            timeout: Duration::from_secs(60),
            max_retries: 3,
            retry_backoff: Duration::from_millis(250),
            auth_token_env: None,
        }
    }
}

pub struct RemoteGenerator {
    config: RemoteGeneratorConfig,
    agent: ureq::Agent,
    token: Option<String>,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: AssistantMessage,
}

#[derive(Deserialize)]
struct AssistantMessage {
    content: String,
}

impl RemoteGenerator {
    /// Builds the client, resolving the auth token now so a missing
    /// credential fails at configuration time rather than mid-run.
    pub fn new(config: RemoteGeneratorConfig) -> Result<Self, GenError> {
        let token = match &config.auth_token_env {
            Some(var) => Some(std::env::var(var).map_err(|_| GenError::MissingAuthToken {
                var: var.clone(),
            })?),
            None => None,
        };
        let agent = ureq::AgentBuilder::new().timeout(config.timeout).build();
        Ok(RemoteGenerator {
            config,
            agent,
            token,
        })
    }
}

impl GenerationProvider for RemoteGenerator {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, GenError> {
        let body = serde_json::json!({
            "model": self.config.model,
            "messages": messages,
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
        });
        let value = post_json(
            &self.agent,
            &self.config.endpoint,
            self.token.as_deref(),
            &body,
            self.config.max_retries,
            self.config.retry_backoff,
        )
        .map_err(|e| GenError::Provider {
            attempts: e.attempts,
            message: e.message,
        })?;
        let parsed: ChatResponse =
            serde_json::from_value(value).map_err(|e| GenError::MalformedResponse {
                message: e.to_string(),
            })?;
        let text = parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| GenError::MalformedResponse {
                message: "response has no choices".to_string(),
            })?;
        Ok(text)
    }
}
