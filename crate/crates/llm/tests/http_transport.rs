//! Runs the HTTP transport against a local stand-in for a chat-completions
//! server.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};

use slurg_llm::transport::{ChatTransport, HttpTransport, RetryPolicy, TransportError};
use slurg_llm::{PromptBundle, SamplingParams};

#[derive(Clone, Default)]
struct Server {
    bodies: Arc<Mutex<Vec<Value>>>,
    auth: Arc<Mutex<Vec<Option<String>>>>,
    hits: Arc<AtomicUsize>,
    /// status codes to return before succeeding
    failures: Arc<Mutex<Vec<u16>>>,
}

async fn handler(State(s): State<Server>, headers: HeaderMap, Json(body): Json<Value>) -> (StatusCode, Json<Value>) {
    s.hits.fetch_add(1, Ordering::SeqCst);
    s.bodies.lock().unwrap().push(body.clone());
    s.auth
        .lock()
        .unwrap()
        .push(headers.get("authorization").map(|v| v.to_str().unwrap().to_string()));
    let next_failure = {
        let mut f = s.failures.lock().unwrap();
        if f.is_empty() {
            None
        } else {
            Some(f.remove(0))
        }
    };
    if let Some(code) = next_failure {
        return (StatusCode::from_u16(code).unwrap(), Json(json!({"error": "nope"})));
    }
    let user = body["messages"][1]["content"].as_str().unwrap_or_default();
    (
        StatusCode::OK,
        Json(json!({"choices": [{"message": {"role": "assistant", "content": format!("echo: {user}")}}]})),
    )
}

async fn spawn(server: Server) -> String {
    let app = Router::new().route("/v1/chat/completions", post(handler)).with_state(server);
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    format!("http://{addr}/v1")
}

fn transport(endpoint: &str, token_env: Option<&str>, attempts: u32) -> HttpTransport {
    HttpTransport::new(
        endpoint,
        "test-model",
        token_env,
        Duration::from_secs(5),
        RetryPolicy {
            max_attempts: attempts,
            initial_backoff_ms: 1,
        },
    )
    .unwrap()
}

fn prompt(params: SamplingParams) -> PromptBundle {
    PromptBundle {
        system: "sys".into(),
        user: "hello".into(),
        params,
    }
}

#[tokio::test]
async fn sends_openai_shaped_body() {
    let server = Server::default();
    let endpoint = spawn(server.clone()).await;
    std::env::set_var("SLURG_TEST_TOKEN", "sekrit");
    let t = transport(&endpoint, Some("SLURG_TEST_TOKEN"), 1);
    let out = t.complete(&prompt(SamplingParams::ANNOTATION)).await.unwrap();
    assert_eq!(out, "echo: hello");
    t.complete(&prompt(SamplingParams::GENERATION)).await.unwrap();

    let bodies = server.bodies.lock().unwrap().clone();
    assert_eq!(bodies[0]["model"], "test-model");
    assert_eq!(bodies[0]["messages"][0], json!({"role": "system", "content": "sys"}));
    assert_eq!(bodies[0]["messages"][1], json!({"role": "user", "content": "hello"}));
    assert_eq!((bodies[0]["temperature"].as_f64(), bodies[0]["top_p"].as_f64()), (Some(0.7), Some(0.9)));
    assert_eq!((bodies[1]["temperature"].as_f64(), bodies[1]["top_p"].as_f64()), (Some(1.2), Some(0.9)));
    assert_eq!(bodies[1]["max_tokens"], 1024);
    assert_eq!(server.auth.lock().unwrap()[0].as_deref(), Some("Bearer sekrit"));
}

#[tokio::test]
async fn retries_server_errors_then_succeeds() {
    let server = Server::default();
    server.failures.lock().unwrap().extend([503, 429]);
    let endpoint = spawn(server.clone()).await;
    let out = transport(&endpoint, None, 3)
        .complete(&prompt(SamplingParams::ANNOTATION))
        .await
        .unwrap();
    assert_eq!(out, "echo: hello");
    assert_eq!(server.hits.load(Ordering::SeqCst), 3);
}

#[tokio::test]
async fn gives_up_after_max_attempts() {
    let server = Server::default();
    server.failures.lock().unwrap().extend([500, 500, 500, 500]);
    let endpoint = spawn(server.clone()).await;
    let err = transport(&endpoint, None, 3)
        .complete(&prompt(SamplingParams::ANNOTATION))
        .await
        .unwrap_err();
    assert!(matches!(err, TransportError::Status { status: 500, .. }));
    assert_eq!(server.hits.load(Ordering::SeqCst), 3);
}

#[tokio::test]
async fn client_errors_are_not_retried() {
    let server = Server::default();
    server.failures.lock().unwrap().push(400);
    let endpoint = spawn(server.clone()).await;
    let err = transport(&endpoint, None, 3)
        .complete(&prompt(SamplingParams::ANNOTATION))
        .await
        .unwrap_err();
    assert!(matches!(err, TransportError::Status { status: 400, .. }));
    assert_eq!(server.hits.load(Ordering::SeqCst), 1);
}

#[tokio::test]
async fn unreachable_endpoint_is_a_network_error() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    let err = transport(&format!("http://{addr}/v1"), None, 2)
        .complete(&prompt(SamplingParams::ANNOTATION))
        .await
        .unwrap_err();
    assert!(matches!(err, TransportError::Network(_)));
}

#[test]
fn missing_token_variable() {
    let err = HttpTransport::new("http://x", "m", Some("SLURG_UNSET_VAR_XYZ"), Duration::from_secs(1), RetryPolicy::default())
        .err()
        .unwrap();
    assert_eq!(err, TransportError::MissingToken("SLURG_UNSET_VAR_XYZ".into()));
}
