//! Wire-level tests for the remote embedding and generation clients, against
//! a local stub server: request shape, auth header, retry policy, and the
//! failure taxonomy for bad responses.

use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use ragmark::embed::{EmbedError, EmbeddingProvider, RemoteEmbedder, RemoteEmbedderConfig};
use ragmark::qa_gen::{ChatMessage, GenError, GenerationProvider, RemoteGenerator, RemoteGeneratorConfig};

#[derive(Debug)]
struct Recorded {
    path: String,
    auth: Option<String>,
    content_type: Option<String>,
    body: serde_json::Value,
}

struct Stub {
    base: String,
    records: Arc<Mutex<Vec<Recorded>>>,
    handle: thread::JoinHandle<()>,
}

/// Serves exactly `responses.len()` requests in order, recording each one,
/// then exits. `finish` joins the server thread, so a test that reaches it
/// has triggered every planned exchange and no more.
fn stub(responses: Vec<(u16, String)>) -> Stub {
    let server = tiny_http::Server::http("127.0.0.1:0").expect("bind stub server");
    let addr = server.server_addr().to_ip().expect("tcp listener");
    let records = Arc::new(Mutex::new(Vec::new()));
    let sink = Arc::clone(&records);
    let handle = thread::spawn(move || {
        for (status, body) in responses {
            let mut request = match server.recv() {
                Ok(r) => r,
                Err(_) => return,
            };
            let mut raw = String::new();
            request
                .as_reader()
                .read_to_string(&mut raw)
                .expect("read request body");
            let header = |name: &'static str| {
                request
                    .headers()
                    .iter()
                    .find(|h| h.field.equiv(name))
                    .map(|h| h.value.as_str().to_string())
            };
            sink.lock().unwrap().push(Recorded {
                path: request.url().to_string(),
                auth: header("Authorization"),
                content_type: header("Content-Type"),
                body: serde_json::from_str(&raw)
                    .unwrap_or(serde_json::Value::String(raw.clone())),
            });
            let response =
                tiny_http::Response::from_string(body).with_status_code(tiny_http::StatusCode(status));
            let _ = request.respond(response);
        }
    });
    Stub {
        base: format!("http://{addr}"),
        records,
        handle,
    }
}

impl Stub {
    fn endpoint(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    fn finish(self) -> Vec<Recorded> {
        self.handle.join().expect("stub server thread");
        Arc::try_unwrap(self.records)
            .expect("no other record handles")
            .into_inner()
            .unwrap()
    }
}

/// Test-friendly defaults: no real waiting between retries.
fn embed_config(endpoint: String, dim: usize) -> RemoteEmbedderConfig {
    let mut config = RemoteEmbedderConfig::new(endpoint, "test-embedder", dim);
    config.timeout = Duration::from_secs(5);
    config.retry_backoff = Duration::from_millis(1);
    config
}

fn gen_config(endpoint: String) -> RemoteGeneratorConfig {
    let mut config = RemoteGeneratorConfig::new(endpoint, "test-generator");
    config.timeout = Duration::from_secs(5);
    config.retry_backoff = Duration::from_millis(1);
    config
}

fn embedding_body(values: &[f64]) -> String {
    serde_json::json!({"data": [{"embedding": values, "index": 0}]}).to_string()
}

#[test]
fn embedding_request_and_response_follow_the_wire_convention() {
    let stub = stub(vec![(200, embedding_body(&[0.5, -0.25, 0.125, 1.0]))]);
    let embedder = RemoteEmbedder::new(embed_config(stub.endpoint("/v1/embeddings"), 4)).unwrap();

    let got = embedder.embed("tidal power turbines").unwrap();
    assert_eq!(got.values(), &[0.5, -0.25, 0.125, 1.0]);

    let records = stub.finish();
    assert_eq!(records.len(), 1);
    let r = &records[0];
    assert_eq!(r.path, "/v1/embeddings");
    assert_eq!(r.body["model"], "test-embedder");
    assert_eq!(r.body["input"], serde_json::json!(["tidal power turbines"]));
    assert!(r.auth.is_none(), "no token configured, no auth header");
    let content_type = r.content_type.as_deref().unwrap_or("");
    assert!(content_type.starts_with("application/json"), "{content_type}");
}

#[test]
fn embedding_data_entries_are_reordered_by_index() {
    // A service may return the batch out of order; `index` is authoritative.
    let body = serde_json::json!({"data": [
        {"embedding": [9.0, 9.0], "index": 1},
        {"embedding": [1.0, 2.0], "index": 0},
    ]})
    .to_string();
    let stub = stub(vec![(200, body)]);
    let embedder = RemoteEmbedder::new(embed_config(stub.endpoint("/embed"), 2)).unwrap();
    let got = embedder.embed("anything").unwrap();
    assert_eq!(got.values(), &[1.0, 2.0]);
    stub.finish();
}

#[test]
fn bearer_token_is_read_from_the_environment() {
    let stub = stub(vec![(200, embedding_body(&[1.0, 0.0]))]);
    std::env::set_var("RAGMARK_TEST_EMBED_TOKEN", "sk-stub-123");
    let mut config = embed_config(stub.endpoint("/embed"), 2);
    config.auth_token_env = Some("RAGMARK_TEST_EMBED_TOKEN".to_string());
    let embedder = RemoteEmbedder::new(config).unwrap();
    embedder.embed("secret text").unwrap();

    let records = stub.finish();
    assert_eq!(records[0].auth.as_deref(), Some("Bearer sk-stub-123"));
}

#[test]
fn missing_token_variable_fails_at_construction() {
    // No server: the constructor must reject before any request is possible.
    let mut config = embed_config("http://127.0.0.1:9/embed".to_string(), 2);
    config.auth_token_env = Some("RAGMARK_TEST_TOKEN_THAT_IS_NEVER_SET".to_string());
    let err = RemoteEmbedder::new(config).err().expect("constructor should fail");
    assert!(
        matches!(&err, EmbedError::MissingAuthToken { var } if var == "RAGMARK_TEST_TOKEN_THAT_IS_NEVER_SET"),
        "{err:?}"
    );
}

#[test]
fn transient_statuses_are_retried_until_success() {
    let stub = stub(vec![
        (503, "service warming up".to_string()),
        (429, "slow down".to_string()),
        (200, embedding_body(&[0.25, 0.75])),
    ]);
    let mut config = embed_config(stub.endpoint("/embed"), 2);
    config.max_retries = 3;
    let embedder = RemoteEmbedder::new(config).unwrap();
    let got = embedder.embed("retry me").unwrap();
    assert_eq!(got.values(), &[0.25, 0.75]);

    let records = stub.finish();
    assert_eq!(records.len(), 3, "one initial attempt plus two retries");
    // Every attempt re-sends the identical request.
    assert!(records.iter().all(|r| r.body == records[0].body));
}

#[test]
fn client_errors_are_not_retried() {
    let stub = stub(vec![(400, r#"{"error":"bad input"}"#.to_string())]);
    let mut config = embed_config(stub.endpoint("/embed"), 2);
    config.max_retries = 5;
    let embedder = RemoteEmbedder::new(config).unwrap();
    let err = embedder.embed("rejected").unwrap_err();
    match err {
        EmbedError::Provider { attempts, message } => {
            assert_eq!(attempts, 1, "a 4xx must not be retried");
            assert!(message.contains("400"), "{message}");
        }
        other => panic!("expected provider error, got {other:?}"),
    }
    // finish() would hang if the client had sent a second request; the stub
    // planned exactly one.
    assert_eq!(stub.finish().len(), 1);
}

#[test]
fn retry_budget_is_finite_and_counted() {
    let stub = stub(vec![
        (503, "no".to_string()),
        (503, "still no".to_string()),
        (503, "give up".to_string()),
    ]);
    let mut config = embed_config(stub.endpoint("/embed"), 2);
    config.max_retries = 2;
    let embedder = RemoteEmbedder::new(config).unwrap();
    let err = embedder.embed("doomed").unwrap_err();
    match err {
        EmbedError::Provider { attempts, message } => {
            assert_eq!(attempts, 3, "1 + max_retries attempts");
            assert!(message.contains("503"), "{message}");
        }
        other => panic!("expected provider error, got {other:?}"),
    }
    assert_eq!(stub.finish().len(), 3);
}

#[test]
fn wrong_dimensionality_is_rejected() {
    let stub = stub(vec![(200, embedding_body(&[1.0, 2.0, 3.0]))]);
    let embedder = RemoteEmbedder::new(embed_config(stub.endpoint("/embed"), 4)).unwrap();
    let err = embedder.embed("text").unwrap_err();
    assert!(
        matches!(err, EmbedError::DimMismatch { want: 4, got: 3 }),
        "{err:?}"
    );
    stub.finish();
}

#[test]
fn non_json_success_body_is_an_error_and_not_retried() {
    let stub = stub(vec![(200, "<html>proxy error page</html>".to_string())]);
    let mut config = embed_config(stub.endpoint("/embed"), 2);
    config.max_retries = 5;
    let embedder = RemoteEmbedder::new(config).unwrap();
    let err = embedder.embed("text").unwrap_err();
    match err {
        EmbedError::Provider { attempts, message } => {
            assert_eq!(attempts, 1);
            assert!(message.contains("not JSON"), "{message}");
        }
        other => panic!("expected provider error, got {other:?}"),
    }
    assert_eq!(stub.finish().len(), 1);
}

#[test]
fn json_with_wrong_shape_is_malformed() {
    let stub = stub(vec![
        (200, r#"{"embeddings": [[1.0, 2.0]]}"#.to_string()),
        (200, r#"{"data": []}"#.to_string()),
    ]);
    let embedder = RemoteEmbedder::new(embed_config(stub.endpoint("/embed"), 2)).unwrap();

    let err = embedder.embed("wrong key").unwrap_err();
    assert!(matches!(err, EmbedError::MalformedResponse { .. }), "{err:?}");

    let err = embedder.embed("empty data").unwrap_err();
    assert!(
        matches!(&err, EmbedError::MalformedResponse { message } if message.contains("empty data")),
        "{err:?}"
    );
    stub.finish();
}

#[test]
fn chat_request_carries_messages_and_sampling_parameters() {
    let body = serde_json::json!({
        "choices": [{"message": {"role": "assistant", "content": "Geneva."}}]
    })
    .to_string();
    let stub = stub(vec![(200, body)]);
    std::env::set_var("RAGMARK_TEST_CHAT_TOKEN", "sk-chat-456");
    let mut config = gen_config(stub.endpoint("/v1/chat/completions"));
    config.temperature = 0.25;
    config.max_tokens = 64;
    config.auth_token_env = Some("RAGMARK_TEST_CHAT_TOKEN".to_string());
    let generator = RemoteGenerator::new(config).unwrap();

    let messages = vec![
        ChatMessage {
            role: "system".to_string(),
            content: "Answer in one word.".to_string(),
        },
        ChatMessage::user("Where is CERN?"),
    ];
    let answer = generator.complete(&messages).unwrap();
    assert_eq!(answer, "Geneva.");

    let records = stub.finish();
    let r = &records[0];
    assert_eq!(r.path, "/v1/chat/completions");
    assert_eq!(r.auth.as_deref(), Some("Bearer sk-chat-456"));
    assert_eq!(r.body["model"], "test-generator");
    assert_eq!(r.body["temperature"], 0.25);
    assert_eq!(r.body["max_tokens"], 64);
    assert_eq!(r.body["messages"][0]["role"], "system");
    assert_eq!(r.body["messages"][1]["role"], "user");
    assert_eq!(r.body["messages"][1]["content"], "Where is CERN?");
}

#[test]
fn chat_response_without_choices_is_malformed() {
    let stub = stub(vec![(200, r#"{"choices": []}"#.to_string())]);
    let generator = RemoteGenerator::new(gen_config(stub.endpoint("/chat"))).unwrap();
    let err = generator.complete(&[ChatMessage::user("hi")]).unwrap_err();
    assert!(
        matches!(&err, GenError::MalformedResponse { message } if message.contains("no choices")),
        "{err:?}"
    );
    stub.finish();
}

#[test]
fn chat_retries_transient_failures_like_the_embedder() {
    let ok = serde_json::json!({
        "choices": [{"message": {"role": "assistant", "content": "eventually"}}]
    })
    .to_string();
    let stub = stub(vec![(500, "boom".to_string()), (200, ok)]);
    let mut config = gen_config(stub.endpoint("/chat"));
    config.max_retries = 1;
    let generator = RemoteGenerator::new(config).unwrap();
    let answer = generator.complete(&[ChatMessage::user("try")]).unwrap();
    assert_eq!(answer, "eventually");
    assert_eq!(stub.finish().len(), 2);
}
