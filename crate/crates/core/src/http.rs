//! JSON-over-HTTP plumbing shared by the remote providers: POST with bearer
//! auth and bounded retries. Transport failures and 429/5xx responses are
//! retried with exponential backoff; other statuses fail immediately.

use std::thread;
use std::time::Duration;

const MAX_BACKOFF: Duration = Duration::from_secs(5);

#[derive(Debug)]
pub(crate) struct HttpError {
    /// Requests actually issued before giving up.
    pub attempts: u32,
    pub message: String,
}

fn is_retryable(err: &ureq::Error) -> bool {
    match err {
        ureq::Error::Status(code, _) => *code == 429 || (500..=599).contains(code),
        ureq::Error::Transport(_) => true,
    }
}

/// Issues `1 + max_retries` attempts at most. Returns the parsed JSON body of
/// the first success; a 2xx response that is not valid JSON is an error and
/// is not retried.
pub(crate) fn post_json(
    agent: &ureq::Agent,
    url: &str,
    bearer: Option<&str>,
    body: &serde_json::Value,
    max_retries: u32,
    backoff: Duration,
) -> Result<serde_json::Value, HttpError> {
    let mut attempts = 0;
    loop {
        attempts += 1;
        let mut request = agent.post(url);
        if let Some(token) = bearer {
            request = request.set("Authorization", &format!("Bearer {token}"));
        }
        match request.send_json(body) {
            Ok(response) => {
                return response.into_json().map_err(|e| HttpError {
                    attempts,
                    message: format!("response body is not JSON: {e}"),
                });
            }
            Err(err) => {
                let retryable = is_retryable(&err);
                let message = match &err {
                    ureq::Error::Status(code, _) => format!("HTTP status {code}"),
                    ureq::Error::Transport(t) => format!("transport error: {t}"),
                };
                if !retryable || attempts > max_retries {
                    return Err(HttpError { attempts, message });
                }
                let exp = attempts.saturating_sub(1).min(16);
                let delay = backoff
                    .saturating_mul(2u32.saturating_pow(exp))
                    .min(MAX_BACKOFF);
                log::debug!("retrying {url} after {message} (attempt {attempts})");
                thread::sleep(delay);
            }
        }
    }
}
