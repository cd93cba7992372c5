//! Chat-completion transports.
//!
//! [`HttpTransport`] talks to any OpenAI-compatible `/chat/completions`
//! endpoint. The other transports never touch the network and exist for
//! tests and dry runs.

use std::collections::HashMap;
use std::sync::Mutex;
use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::prompt::{PromptBundle, ANNOTATION_SYSTEM};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransportError {
    #[error("endpoint returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("network error: {0}")]
    Network(String),
    #[error("unexpected response body: {0}")]
    Decode(String),
    #[error("environment variable `{0}` holding the API token is not set")]
    MissingToken(String),
    #[error("{0}")]
    Mock(String),
}

impl TransportError {
    /// Whether another attempt could help. Content problems never are.
    pub fn is_retryable(&self) -> bool {
        match self {
            TransportError::Status { status, .. } => *status == 429 || *status >= 500,
            TransportError::Network(_) => true,
            _ => false,
        }
    }
}

#[async_trait]
pub trait ChatTransport: Send + Sync {
    /// Sends one prompt and returns the assistant message content.
    async fn complete(&self, prompt: &PromptBundle) -> Result<String, TransportError>;
}

/// The chat-completions request body for `prompt`.
pub fn request_body(model: &str, prompt: &PromptBundle) -> serde_json::Value {
    json!({
        "model": model,
        "messages": [
            {"role": "system", "content": prompt.system},
            {"role": "user", "content": prompt.user},
        ],
        "temperature": prompt.params.temperature,
        "top_p": prompt.params.top_p,
        "max_tokens": prompt.params.max_tokens,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    /// Delay before the second attempt; doubled for each later one.
    pub initial_backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            initial_backoff_ms: 500,
        }
    }
}

impl RetryPolicy {
    pub fn backoff(&self, attempt: u32) -> Duration {
        Duration::from_millis(self.initial_backoff_ms.saturating_mul(1 << (attempt - 1).min(16)))
    }
}

#[derive(Debug, Deserialize)]
struct CompletionResponse {
    choices: Vec<Choice>,
}

#[derive(Debug, Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Debug, Deserialize)]
struct Message {
    #[serde(default)]
    content: Option<String>,
}

pub struct HttpTransport {
    client: reqwest::Client,
    url: String,
    model: String,
    token: Option<String>,
    retry: RetryPolicy,
}

impl HttpTransport {
    /// `endpoint` is the API base (e.g. `http://localhost:8000/v1`);
    /// `/chat/completions` is appended. The bearer token is read once from
    /// `token_env` when given.
    pub fn new(
        endpoint: &str,
        model: impl Into<String>,
        token_env: Option<&str>,
        timeout: Duration,
        retry: RetryPolicy,
    ) -> Result<Self, TransportError> {
        let token = match token_env {
            Some(var) => Some(
                std::env::var(var).map_err(|_| TransportError::MissingToken(var.to_string()))?,
            ),
            None => None,
        };
        let client = reqwest::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| TransportError::Network(e.to_string()))?;
        Ok(HttpTransport {
            client,
            url: format!("{}/chat/completions", endpoint.trim_end_matches('/')),
            model: model.into(),
            token,
            retry,
        })
    }

    async fn attempt(&self, body: &serde_json::Value) -> Result<String, TransportError> {
        let mut req = self.client.post(&self.url).json(body);
        if let Some(token) = &self.token {
            req = req.bearer_auth(token);
        }
        let resp = req
            .send()
            .await
            .map_err(|e| TransportError::Network(e.to_string()))?;
        let status = resp.status();
        let text = resp
            .text()
            .await
            .map_err(|e| TransportError::Network(e.to_string()))?;
        if !status.is_success() {
            return Err(TransportError::Status {
                status: status.as_u16(),
                body: text,
            });
        }
        let parsed: CompletionResponse =
            serde_json::from_str(&text).map_err(|e| TransportError::Decode(e.to_string()))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| TransportError::Decode("no message content in choices[0]".into()))
    }
}

#[async_trait]
impl ChatTransport for HttpTransport {
    async fn complete(&self, prompt: &PromptBundle) -> Result<String, TransportError> {
        let body = request_body(&self.model, prompt);
        let mut attempt = 1;
        loop {
            match self.attempt(&body).await {
                Err(e) if e.is_retryable() && attempt < self.retry.max_attempts => {
                    tokio::time::sleep(self.retry.backoff(attempt)).await;
                    attempt += 1;
                }
                other => return other,
            }
        }
    }
}

/// Returns the same response to every request.
pub struct CannedTransport {
    response: String,
}

impl CannedTransport {
    pub fn new(response: impl Into<String>) -> Self {
        CannedTransport {
            response: response.into(),
        }
    }
}

#[async_trait]
impl ChatTransport for CannedTransport {
    async fn complete(&self, _prompt: &PromptBundle) -> Result<String, TransportError> {
        Ok(self.response.clone())
    }
}

/// Answers through a closure; handy for scripted failures.
pub struct FnTransport<F>(pub F);

#[async_trait]
impl<F> ChatTransport for FnTransport<F>
where
    F: Fn(&PromptBundle) -> Result<String, TransportError> + Send + Sync,
{
    async fn complete(&self, prompt: &PromptBundle) -> Result<String, TransportError> {
        (self.0)(prompt)
    }
}

/// The comment inside the last `<text>…</text>` block of an annotation
/// prompt.
pub fn prompt_text(user: &str) -> Option<&str> {
    let open = user.rfind("<text>\n")? + "<text>\n".len();
    let close = user[open..].rfind("\n</text>")? + open;
    Some(&user[open..close])
}

/// Offline stand-in for a model.
///
/// Annotation prompts are answered with the tagged form registered for
/// their text (or the text untagged when none is registered), wrapped in
/// a `<labeled_text>` block. Generation prompts get the configured canned
/// response.
pub struct MockTransport {
    tagged_by_text: HashMap<String, String>,
    generation_response: String,
}

impl MockTransport {
    pub fn new(generation_response: impl Into<String>) -> Self {
        MockTransport {
            tagged_by_text: HashMap::new(),
            generation_response: generation_response.into(),
        }
    }

    /// Registers the markup to return for a comment.
    pub fn answer(&mut self, text: impl Into<String>, tagged: impl Into<String>) {
        self.tagged_by_text.insert(text.into(), tagged.into());
    }
}

#[async_trait]
impl ChatTransport for MockTransport {
    async fn complete(&self, prompt: &PromptBundle) -> Result<String, TransportError> {
        if prompt.system != ANNOTATION_SYSTEM {
            return Ok(self.generation_response.clone());
        }
        let text = prompt_text(&prompt.user)
            .ok_or_else(|| TransportError::Mock("annotation prompt without <text> block".into()))?;
        let tagged = self.tagged_by_text.get(text).map(String::as_str).unwrap_or(text);
        Ok(format!("<labeled_text>\n{tagged}\n</labeled_text>"))
    }
}

/// Wraps a transport and keeps every prompt it was given.
pub struct RecordingTransport<T> {
    inner: T,
    prompts: Mutex<Vec<PromptBundle>>,
}

impl<T> RecordingTransport<T> {
    pub fn new(inner: T) -> Self {
        RecordingTransport {
            inner,
            prompts: Mutex::new(Vec::new()),
        }
    }

    pub fn prompts(&self) -> Vec<PromptBundle> {
        self.prompts.lock().unwrap().clone()
    }
}

#[async_trait]
impl<T: ChatTransport> ChatTransport for RecordingTransport<T> {
    async fn complete(&self, prompt: &PromptBundle) -> Result<String, TransportError> {
        self.prompts.lock().unwrap().push(prompt.clone());
        self.inner.complete(prompt).await
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompt::SamplingParams;

    #[test]
    fn retry_classification() {
        let s = |status| TransportError::Status { status, body: String::new() };
        assert!(s(429).is_retryable());
        assert!(s(503).is_retryable());
        assert!(!s(400).is_retryable());
        assert!(TransportError::Network("x".into()).is_retryable());
        assert!(!TransportError::Decode("x".into()).is_retryable());
    }

    #[test]
    fn backoff_doubles() {
        let p = RetryPolicy { max_attempts: 4, initial_backoff_ms: 100 };
        assert_eq!(p.backoff(1), Duration::from_millis(100));
        assert_eq!(p.backoff(3), Duration::from_millis(400));
    }

    #[test]
    fn body_shape() {
        let prompt = PromptBundle {
            system: "s".into(),
            user: "u".into(),
            params: SamplingParams::ANNOTATION,
        };
        let body = request_body("m", &prompt);
        assert_eq!(body["messages"][0]["role"], "system");
        assert_eq!(body["messages"][1]["content"], "u");
        assert_eq!(body["temperature"], 0.7);
        assert_eq!(body["top_p"], 0.9);
        assert_eq!(body["max_tokens"], 1024);
    }

    #[test]
    fn prompt_text_takes_last_block() {
        assert_eq!(prompt_text("x <text>\nno\n</text> <text>\nyes\n</text>\n"), Some("yes"));
        assert_eq!(prompt_text("nothing"), None);
    }
}
