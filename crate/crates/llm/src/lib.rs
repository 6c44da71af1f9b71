//! Completion backends and the gateway that fronts them.
//!
//! The [`Gateway`] owns cross-cutting request policy: transient-failure
//! retries with exponential backoff, a hard request budget, bounded
//! parallelism, and repetition voting. Backends only turn a prompt into raw
//! reply text: [`ScriptedBackend`] serves deterministic fixtures for tests
//! and offline runs, [`RemoteBackend`] talks to an OpenAI-style
//! chat-completions endpoint.

mod backend;
mod gateway;
mod parse;
mod remote;
mod scripted;

pub use backend::{BackendError, FixtureKey, LlmBackend, LlmRequest, LlmResponse};
pub use gateway::{Gateway, GatewayConfig, LlmError};
pub use parse::parse_reply;
pub use remote::{RemoteBackend, RemoteBackendConfig};
pub use scripted::ScriptedBackend;

/// Environment variable naming the chat-completions endpoint URL.
pub const ENV_API_URL: &str = "ABBREX_API_URL";
/// Environment variable naming the model to request.
pub const ENV_MODEL: &str = "ABBREX_MODEL";
/// Environment variable holding the bearer credential, if the endpoint needs one.
pub const ENV_API_KEY: &str = "ABBREX_API_KEY";
