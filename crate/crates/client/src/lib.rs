//! HTTP client for the expansion service. One thin method per endpoint;
//! non-2xx responses surface as [`ClientError::Api`] with the server's error
//! message and status.

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use abbrex_api::{
    DetectRequest, DetectResponse, ErrorBody, EvaluateRequest, EvaluateResponse, ExpandRequest,
    ExpandResponse, HealthResponse, DETECT_PATH, EVALUATE_PATH, EXPAND_PATH, HEALTH_PATH,
};

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("request failed: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("server returned {status}: {message}")]
    Api { status: u16, message: String },
}

impl ClientError {
    pub fn status(&self) -> Option<u16> {
        match self {
            ClientError::Api { status, .. } => Some(*status),
            ClientError::Transport(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AbbrexClient {
    base_url: String,
    http: reqwest::Client,
}

impl AbbrexClient {
    /// `base_url` like `http://127.0.0.1:8080` (no trailing slash needed).
    pub fn new(base_url: impl Into<String>) -> Self {
        let mut base_url = base_url.into();
        while base_url.ends_with('/') {
            base_url.pop();
        }
        Self { base_url, http: reqwest::Client::new() }
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    async fn decode<T: DeserializeOwned>(response: reqwest::Response) -> Result<T, ClientError> {
        let status = response.status();
        if status.is_success() {
            return Ok(response.json().await?);
        }
        let status = status.as_u16();
        let text = response.text().await.unwrap_or_default();
        let message = serde_json::from_str::<ErrorBody>(&text)
            .map(|body| body.error)
            .unwrap_or(text);
        Err(ClientError::Api { status, message })
    }

    async fn post<B: Serialize, T: DeserializeOwned>(
        &self,
        path: &str,
        body: &B,
    ) -> Result<T, ClientError> {
        let url = format!("{}{}", self.base_url, path);
        Self::decode(self.http.post(url).json(body).send().await?).await
    }

    pub async fn health(&self) -> Result<HealthResponse, ClientError> {
        let url = format!("{}{}", self.base_url, HEALTH_PATH);
        Self::decode(self.http.get(url).send().await?).await
    }

    pub async fn detect(&self, request: &DetectRequest) -> Result<DetectResponse, ClientError> {
        self.post(DETECT_PATH, request).await
    }

    pub async fn expand(&self, request: &ExpandRequest) -> Result<ExpandResponse, ClientError> {
        self.post(EXPAND_PATH, request).await
    }

    pub async fn evaluate(&self, request: &EvaluateRequest) -> Result<EvaluateResponse, ClientError> {
        self.post(EVALUATE_PATH, request).await
    }
}
