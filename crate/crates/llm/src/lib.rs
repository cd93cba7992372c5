//! Prompting a chat model to annotate fallacy spans and to generate
//! synthetic comments.
//!
//! * [`prompt`]: the prompt templates and their assembly
//! * [`transport`]: OpenAI-compatible HTTP client and offline transports
//! * [`batch`]: annotation and generation batches
//! * [`audit`]: append-only log of raw responses
//! * [`config`]: JSON configuration

pub mod audit;
pub mod batch;
pub mod config;
pub mod prompt;
pub mod transport;

pub use audit::AuditLog;
pub use batch::{annotate_batch, generate_batch, plan_generation_requests, BatchOptions, Failure};
pub use config::{ConfigError, LlmConfig, TransportKind};
pub use prompt::{build_annotation_prompt, build_generation_prompt, GenerationRequest, PromptBundle, SamplingParams};
pub use transport::{ChatTransport, HttpTransport, MockTransport, TransportError};
