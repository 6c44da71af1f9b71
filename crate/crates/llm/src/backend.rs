//! The completion request/response types and the backend abstraction.

use abbrex_core::context::ContextMode;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Identifies a request independently of prompt wording, so scripted
/// fixtures survive template changes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FixtureKey {
    /// The identifier being expanded.
    pub identifier: String,
    /// Expansion round (1 or 2).
    pub round: u8,
    pub context_mode: ContextMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmRequest {
    pub prompt: String,
    pub model_name: String,
    pub temperature: f32,
    /// Replies longer than this are truncated before parsing.
    pub max_output_chars: usize,
    /// Required by the scripted backend; ignored by remote backends.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixture_key: Option<FixtureKey>,
}

impl LlmRequest {
    pub fn new(prompt: impl Into<String>) -> Self {
        LlmRequest {
            prompt: prompt.into(),
            model_name: "default".to_string(),
            temperature: 0.0,
            max_output_chars: 4_000,
            fixture_key: None,
        }
    }

    pub fn with_fixture_key(mut self, key: FixtureKey) -> Self {
        self.fixture_key = Some(key);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmResponse {
    pub raw_text: String,
    /// The reply parsed down to an identifier, when the reply contained one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parsed_identifier: Option<String>,
    pub latency_ms: f64,
    /// Which attempt produced this response (1 = no retries needed).
    pub attempt: u32,
}

/// What a backend can report; the gateway decides retry behavior from the
/// variant.
#[derive(Debug, Error)]
pub enum BackendError {
    /// Worth retrying: timeouts, connection resets, 429/5xx responses.
    #[error("transient backend failure: {0}")]
    Transient(String),
    /// Credential rejected; retrying cannot help.
    #[error("authentication failed: {0}")]
    Auth(String),
    /// Permanent failure for this request (bad request, missing fixture).
    #[error("{0}")]
    Fatal(String),
}

/// A completion backend: turns a prompt into raw reply text.
#[async_trait::async_trait]
pub trait LlmBackend: Send + Sync {
    async fn send(&self, request: &LlmRequest) -> Result<String, BackendError>;

    /// Short backend label for logs and reproducibility headers.
    fn label(&self) -> &str;
}
