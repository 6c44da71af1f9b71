//! HTTP backend speaking the OpenAI-compatible chat-completions protocol.

use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};

use crate::backend::{BackendError, LlmBackend, LlmRequest};
use crate::{ENV_API_KEY, ENV_API_URL, ENV_MODEL};

#[derive(Debug, Clone)]
pub struct RemoteBackendConfig {
    /// Base URL of the chat-completions endpoint, e.g.
    /// `https://api.example.com/v1/chat/completions`.
    pub api_url: String,
    pub model: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
}

impl RemoteBackendConfig {
    pub fn new(api_url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            api_url: api_url.into(),
            model: model.into(),
            api_key: None,
            timeout: Duration::from_secs(120),
        }
    }

    /// Read `ABBREX_API_URL`, `ABBREX_MODEL`, and `ABBREX_API_KEY`.
    pub fn from_env() -> Result<Self, BackendError> {
        let api_url = std::env::var(ENV_API_URL)
            .map_err(|_| BackendError::Fatal(format!("{ENV_API_URL} is not set")))?;
        let model = std::env::var(ENV_MODEL)
            .map_err(|_| BackendError::Fatal(format!("{ENV_MODEL} is not set")))?;
        let mut config = Self::new(api_url, model);
        config.api_key = std::env::var(ENV_API_KEY).ok().filter(|k| !k.is_empty());
        Ok(config)
    }
}

pub struct RemoteBackend {
    config: RemoteBackendConfig,
    client: reqwest::Client,
    label: String,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<ChatMessage<'a>>,
    temperature: f32,
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatResponseMessage,
}

#[derive(Deserialize)]
struct ChatResponseMessage {
    content: Option<String>,
}

impl RemoteBackend {
    pub fn new(config: RemoteBackendConfig) -> Result<Self, BackendError> {
        let client = reqwest::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| BackendError::Fatal(format!("http client: {e}")))?;
        let label = format!("remote:{}", config.model);
        Ok(Self { config, client, label })
    }

    pub fn from_env() -> Result<Self, BackendError> {
        Self::new(RemoteBackendConfig::from_env()?)
    }
}

#[async_trait]
impl LlmBackend for RemoteBackend {
    async fn send(&self, request: &LlmRequest) -> Result<String, BackendError> {
        let model = if request.model_name == "default" {
            &self.config.model
        } else {
            &request.model_name
        };
        let body = ChatRequest {
            model,
            messages: vec![ChatMessage { role: "user", content: &request.prompt }],
            temperature: request.temperature,
        };
        let mut builder = self.client.post(&self.config.api_url).json(&body);
        if let Some(key) = &self.config.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = builder
            .send()
            .await
            .map_err(|e| BackendError::Transient(format!("request failed: {e}")))?;
        let status = response.status();
        let text = response
            .text()
            .await
            .map_err(|e| BackendError::Transient(format!("read body: {e}")))?;
        if status == reqwest::StatusCode::UNAUTHORIZED || status == reqwest::StatusCode::FORBIDDEN {
            return Err(BackendError::Auth(format!("{status}: {}", snippet(&text))));
        }
        if status == reqwest::StatusCode::TOO_MANY_REQUESTS || status.is_server_error() {
            return Err(BackendError::Transient(format!("{status}: {}", snippet(&text))));
        }
        if !status.is_success() {
            return Err(BackendError::Fatal(format!("{status}: {}", snippet(&text))));
        }
        let parsed: ChatResponse = serde_json::from_str(&text)
            .map_err(|e| BackendError::Fatal(format!("bad response body: {e}")))?;
        let content = parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| BackendError::Fatal("response has no message content".into()))?;
        let mut content = content;
        if content.chars().count() > request.max_output_chars {
            content = content.chars().take(request.max_output_chars).collect();
        }
        Ok(content)
    }

    fn label(&self) -> &str {
        &self.label
    }
}

fn snippet(text: &str) -> String {
    let trimmed = text.trim();
    if trimmed.chars().count() <= 200 {
        trimmed.to_string()
    } else {
        let head: String = trimmed.chars().take(200).collect();
        format!("{head}…")
    }
}
