//! HTTP service exposing detection, expansion, and evaluation. The gateway —
//! and with it the request budget and parallelism limit — is shared by every
//! request the server handles.

use std::collections::HashMap;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};

use abbrex_api::{
    DetectRequest, DetectResponse, ErrorBody, EvaluateRequest, EvaluateResponse, ExpandRequest,
    ExpandResponse, HealthResponse, InlineDocument, DETECT_PATH, EVALUATE_PATH, EXPAND_PATH,
    HEALTH_PATH,
};
use abbrex_core::bench::validate_entries;
use abbrex_core::detect::{detect, WordList};
use abbrex_core::ident::{split_identifier, IdentifierOccurrence, SourceDocument};
use abbrex_llm::{Gateway, LlmError};
use abbrex_pipeline::{
    expand_occurrence, resolve_entries_inline, run_repeated_evaluation, EvalError, PipelineError,
};

pub struct AppState {
    pub gateway: Arc<Gateway>,
    pub words: Arc<WordList>,
    /// SHA-256 of the wordlist text, surfaced by /healthz for reproducibility.
    pub wordlist_sha256: String,
}

impl AppState {
    pub fn new(gateway: Arc<Gateway>, words: Arc<WordList>, wordlist_sha256: String) -> Arc<Self> {
        Arc::new(AppState { gateway, words, wordlist_sha256 })
    }
}

/// An error response: JSON `{"error": ...}` with a meaningful status.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        ApiError { status: StatusCode::BAD_REQUEST, message: message.into() }
    }

    fn unprocessable(message: impl Into<String>) -> Self {
        ApiError { status: StatusCode::UNPROCESSABLE_ENTITY, message: message.into() }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(ErrorBody { error: self.message })).into_response()
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        let status = match &e {
            PipelineError::Context(_) | PipelineError::Prompt(_) | PipelineError::Ident(_) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            PipelineError::Llm(LlmError::BudgetExceeded { .. }) => StatusCode::TOO_MANY_REQUESTS,
            PipelineError::Llm(LlmError::Config(_)) => StatusCode::INTERNAL_SERVER_ERROR,
            PipelineError::Llm(_) => StatusCode::BAD_GATEWAY,
        };
        ApiError { status, message: e.to_string() }
    }
}

fn accept<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    payload.map(|Json(body)| body).map_err(|e| ApiError::bad_request(e.body_text()))
}

async fn healthz(State(state): State<Arc<AppState>>) -> Json<HealthResponse> {
    Json(HealthResponse {
        status: "ok".to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        backend: state.gateway.backend_label().to_string(),
        wordlist_sha256: state.wordlist_sha256.clone(),
        requests_used: state.gateway.requests_used(),
        request_budget: state.gateway.request_budget(),
    })
}

async fn detect_handler(
    State(state): State<Arc<AppState>>,
    payload: Result<Json<DetectRequest>, JsonRejection>,
) -> Result<Json<DetectResponse>, ApiError> {
    let request = accept(payload)?;
    abbrex_core::ident::validate_identifier_name(&request.identifier)
        .map_err(|e| ApiError::unprocessable(format!("identifier {:?}: {e}", request.identifier)))?;
    let split = split_identifier(&request.identifier)
        .map_err(|e| ApiError::unprocessable(format!("identifier {:?}: {e}", request.identifier)))?;
    let candidates = detect(&split, &state.words, &request.detect.unwrap_or_default());
    Ok(Json(DetectResponse {
        identifier: request.identifier,
        kind: request.kind,
        split,
        candidates,
    }))
}

fn document_from(inline: InlineDocument) -> Arc<SourceDocument> {
    let language = inline.language.unwrap_or_else(|| "text".to_string());
    Arc::new(SourceDocument::from_text(inline.path, &inline.text, language))
}

async fn expand_handler(
    State(state): State<Arc<AppState>>,
    payload: Result<Json<ExpandRequest>, JsonRejection>,
) -> Result<Json<ExpandResponse>, ApiError> {
    let request = accept(payload)?;
    let config = request.config.unwrap_or_default();
    let occurrence = match (request.document, request.line) {
        (Some(inline), Some(line)) => IdentifierOccurrence::in_document(
            request.identifier.as_str(),
            request.kind,
            document_from(inline),
            line,
        ),
        (None, None) => IdentifierOccurrence::bare(request.identifier.as_str(), request.kind),
        (Some(_), None) => return Err(ApiError::unprocessable("a document needs a line number")),
        (None, Some(_)) => return Err(ApiError::unprocessable("a line number needs a document")),
    }
    .map_err(|e| ApiError::unprocessable(e.to_string()))?;

    let result = expand_occurrence(
        &occurrence,
        &config,
        &state.gateway,
        &state.words,
        request.kg_payload.as_deref(),
    )
    .await?;
    Ok(Json(ExpandResponse { result, requests_used: state.gateway.requests_used() }))
}

async fn evaluate_handler(
    State(state): State<Arc<AppState>>,
    payload: Result<Json<EvaluateRequest>, JsonRejection>,
) -> Result<Json<EvaluateResponse>, ApiError> {
    let request = accept(payload)?;
    validate_entries(&request.entries).map_err(|e| ApiError::unprocessable(e.to_string()))?;
    let config = request.config.unwrap_or_default();
    let matching = request.matching.unwrap_or_default();

    let documents: HashMap<String, Arc<SourceDocument>> = request
        .documents
        .into_iter()
        .map(|inline| (inline.path.clone(), document_from(inline)))
        .collect();
    let resolved = resolve_entries_inline(&request.entries, &documents);

    let outcome = run_repeated_evaluation(
        &request.entries,
        &resolved,
        &config,
        &state.gateway,
        &state.words,
        &matching,
        request.repeats,
    )
    .await
    .map_err(|e| match e {
        EvalError::ZeroRepeats => ApiError::unprocessable(e.to_string()),
        EvalError::Score(_) => ApiError::unprocessable(e.to_string()),
    })?;
    Ok(Json(EvaluateResponse { outcome, requests_used: state.gateway.requests_used() }))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route(HEALTH_PATH, get(healthz))
        .route(DETECT_PATH, post(detect_handler))
        .route(EXPAND_PATH, post(expand_handler))
        .route(EVALUATE_PATH, post(evaluate_handler))
        .with_state(state)
}

/// Serve on an already-bound listener until the task is dropped or the
/// process exits.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: Arc<AppState>,
) -> std::io::Result<()> {
    let addr = listener.local_addr()?;
    tracing::info!("listening on http://{addr}");
    axum::serve(listener, router(state)).await
}

/// Bind an ephemeral local port and serve in a background task. Returns the
/// base URL; the server stops when the returned handle is dropped or aborted.
pub async fn spawn_local(
    state: Arc<AppState>,
) -> std::io::Result<(String, tokio::task::JoinHandle<std::io::Result<()>>)> {
    let listener = tokio::net::TcpListener::bind(("127.0.0.1", 0)).await?;
    let addr = listener.local_addr()?;
    let handle = tokio::spawn(serve(listener, state));
    Ok((format!("http://{addr}"), handle))
}
