//! JSON configuration for model access.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::prompt::SamplingParams;
use crate::transport::{HttpTransport, RetryPolicy, TransportError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransportKind {
    Http,
    Mock,
}

/// ```json
/// {
///   "transport": "http",
///   "endpoint": "http://localhost:8000/v1",
///   "model": "my-model",
///   "api_key_env": "LLM_API_KEY",
///   "parallelism": 4,
///   "annotation": {"temperature": 0.7, "top_p": 0.9},
///   "generation": {"temperature": 1.2, "top_p": 0.9, "max_tokens": 1024}
/// }
/// ```
///
/// Every field except `transport` has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlmConfig {
    pub transport: TransportKind,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default = "default_model")]
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default)]
    pub retry: RetryPolicy,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default = "annotation_params")]
    pub annotation: SamplingParams,
    #[serde(default = "generation_params")]
    pub generation: SamplingParams,
    /// Canned response file for generation requests under the mock
    /// transport.
    #[serde(default)]
    pub mock_generation_response: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_model() -> String {
    "default".into()
}
fn default_timeout() -> u64 {
    120
}
fn default_parallelism() -> usize {
    4
}
fn annotation_params() -> SamplingParams {
    SamplingParams::ANNOTATION
}
fn generation_params() -> SamplingParams {
    SamplingParams::GENERATION
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("the http transport needs an `endpoint`")]
    MissingEndpoint,
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl LlmConfig {
    pub fn mock() -> Self {
        LlmConfig {
            transport: TransportKind::Mock,
            endpoint: None,
            model: "mock".into(),
            api_key_env: None,
            timeout_secs: default_timeout(),
            retry: RetryPolicy::default(),
            parallelism: default_parallelism(),
            annotation: SamplingParams::ANNOTATION,
            generation: SamplingParams::GENERATION,
            mock_generation_response: None,
            seed: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let raw = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg: LlmConfig = serde_json::from_str(&raw).map_err(|source| ConfigError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        // relative paths are relative to the config file
        if let (Some(p), Some(dir)) = (&cfg.mock_generation_response, path.parent()) {
            if p.is_relative() {
                cfg.mock_generation_response = Some(dir.join(p));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.transport == TransportKind::Http
            && self.endpoint.as_deref().is_none_or(|e| e.trim().is_empty())
        {
            return Err(ConfigError::MissingEndpoint);
        }
        if self.retry.max_attempts == 0 {
            return Err(ConfigError::Invalid("retry.max_attempts must be at least 1".into()));
        }
        if self.parallelism == 0 {
            return Err(ConfigError::Invalid("parallelism must be at least 1".into()));
        }
        self.annotation
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("annotation: {e}")))?;
        self.generation
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("generation: {e}")))?;
        Ok(())
    }

    pub fn http_transport(&self) -> Result<HttpTransport, TransportError> {
        HttpTransport::new(
            self.endpoint.as_deref().unwrap_or_default(),
            self.model.clone(),
            self.api_key_env.as_deref(),
            Duration::from_secs(self.timeout_secs),
            self.retry.clone(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(json: &str) -> Result<LlmConfig, ConfigError> {
        let cfg: LlmConfig = serde_json::from_str(json).map_err(|source| ConfigError::Json {
            path: "inline".into(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    #[test]
    fn defaults_fill_in() {
        let cfg = parse(r#"{"transport":"mock"}"#).unwrap();
        assert_eq!(cfg.annotation, SamplingParams::ANNOTATION);
        assert_eq!(cfg.generation, SamplingParams::GENERATION);
        assert_eq!(cfg.parallelism, 4);
        assert_eq!(cfg.retry.max_attempts, 3);
    }

    #[test]
    fn http_needs_endpoint() {
        assert!(matches!(parse(r#"{"transport":"http"}"#), Err(ConfigError::MissingEndpoint)));
        assert!(parse(r#"{"transport":"http","endpoint":"http://x/v1"}"#).is_ok());
    }

    #[test]
    fn rejects_bad_values() {
        assert!(matches!(
            parse(r#"{"transport":"mock","parallelism":0}"#),
            Err(ConfigError::Invalid(_))
        ));
        assert!(matches!(
            parse(r#"{"transport":"mock","annotation":{"temperature":0.7,"top_p":0}}"#),
            Err(ConfigError::Invalid(_))
        ));
        assert!(matches!(parse(r#"{"transport":"mock","bogus":1}"#), Err(ConfigError::Json { .. })));
    }
}
