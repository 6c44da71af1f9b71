//! Wire types for the expansion service: request/response bodies shared by
//! the server and its clients.
//!
//! Endpoints:
//! - `GET  /healthz`      → [`HealthResponse`]
//! - `POST /v1/detect`    — [`DetectRequest`] → [`DetectResponse`]
//! - `POST /v1/expand`    — [`ExpandRequest`] → [`ExpandResponse`]
//! - `POST /v1/evaluate`  — [`EvaluateRequest`] → [`EvaluateResponse`]
//!
//! Errors come back as [`ErrorBody`] with a matching HTTP status: 400 for
//! malformed requests, 422 for well-formed requests the service cannot act
//! on, 429 when the request budget is exhausted, 502 for backend failures.

use serde::{Deserialize, Serialize};

use abbrex_core::bench::BenchmarkEntry;
use abbrex_core::detect::{AbbreviationCandidate, DetectConfig};
use abbrex_core::expansion::ExpansionResult;
use abbrex_core::ident::{IdentKind, TokenSplit};
use abbrex_core::score::MatchConfig;
use abbrex_pipeline::{EvaluationOutcome, PipelineConfig};

pub const HEALTH_PATH: &str = "/healthz";
pub const DETECT_PATH: &str = "/v1/detect";
pub const EXPAND_PATH: &str = "/v1/expand";
pub const EVALUATE_PATH: &str = "/v1/evaluate";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    pub version: String,
    /// Label of the completion backend behind the gateway.
    pub backend: String,
    /// SHA-256 of the wordlist in use, for reproducibility headers.
    pub wordlist_sha256: String,
    pub requests_used: u64,
    pub request_budget: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectRequest {
    pub identifier: String,
    #[serde(default)]
    pub kind: IdentKind,
    #[serde(default)]
    pub detect: Option<DetectConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectResponse {
    pub identifier: String,
    pub kind: IdentKind,
    pub split: TokenSplit,
    pub candidates: Vec<AbbreviationCandidate>,
}

/// A source file sent along with a request, in place of server-side file
/// access.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InlineDocument {
    /// Path as referenced by the occurrence or benchmark entries.
    pub path: String,
    pub text: String,
    #[serde(default)]
    pub language: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpandRequest {
    pub identifier: String,
    #[serde(default)]
    pub kind: IdentKind,
    /// Document containing the occurrence; required for the file/window
    /// context modes.
    #[serde(default)]
    pub document: Option<InlineDocument>,
    /// 1-based line of the occurrence within `document`.
    #[serde(default)]
    pub line: Option<usize>,
    #[serde(default)]
    pub kg_payload: Option<String>,
    #[serde(default)]
    pub config: Option<PipelineConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpandResponse {
    pub result: ExpansionResult,
    /// Gateway attempts consumed so far in this server's lifetime.
    pub requests_used: u64,
}

fn default_repeats() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateRequest {
    pub entries: Vec<BenchmarkEntry>,
    /// Source documents for the entries' `file_path`s.
    #[serde(default)]
    pub documents: Vec<InlineDocument>,
    #[serde(default)]
    pub config: Option<PipelineConfig>,
    #[serde(default)]
    pub matching: Option<MatchConfig>,
    #[serde(default = "default_repeats")]
    pub repeats: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluateResponse {
    pub outcome: EvaluationOutcome,
    pub requests_used: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}
