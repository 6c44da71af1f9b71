//! A deterministic backend that replays canned replies from a fixture file.

use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use async_trait::async_trait;
use serde::{Deserialize, Serialize};

use crate::backend::{BackendError, FixtureKey, LlmBackend, LlmRequest};

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FixtureLine {
    key: FixtureKey,
    reply: String,
}

/// Replays scripted replies keyed by `(identifier, round, context_mode)`.
///
/// Requests must carry a fixture key; a request without one, or with a key
/// that has no scripted reply, fails fatally so tests never silently fall
/// through to a wrong answer. Every `send` is counted, which lets tests assert
/// exact call budgets.
pub struct ScriptedBackend {
    replies: HashMap<FixtureKey, String>,
    calls: AtomicU64,
}

impl ScriptedBackend {
    pub fn new(replies: HashMap<FixtureKey, String>) -> Self {
        Self { replies, calls: AtomicU64::new(0) }
    }

    /// Load fixtures from JSON Lines: one `{"key": {...}, "reply": "..."}` per line.
    pub fn from_jsonl_text(text: &str) -> Result<Self, BackendError> {
        let mut replies = HashMap::new();
        for (index, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parsed: FixtureLine = serde_json::from_str(line).map_err(|e| {
                BackendError::Fatal(format!("fixture line {}: {e}", index + 1))
            })?;
            if replies.insert(parsed.key.clone(), parsed.reply).is_some() {
                return Err(BackendError::Fatal(format!(
                    "fixture line {}: duplicate key {:?}",
                    index + 1,
                    parsed.key
                )));
            }
        }
        Ok(Self::new(replies))
    }

    pub fn from_jsonl_path(path: &Path) -> Result<Self, BackendError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BackendError::Fatal(format!("read {}: {e}", path.display())))?;
        Self::from_jsonl_text(&text)
    }

    /// Total `send` calls so far, successful or not.
    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }
}

#[async_trait]
impl LlmBackend for ScriptedBackend {
    async fn send(&self, request: &LlmRequest) -> Result<String, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let key = request.fixture_key.as_ref().ok_or_else(|| {
            BackendError::Fatal("scripted backend needs a fixture key on every request".into())
        })?;
        self.replies
            .get(key)
            .cloned()
            .ok_or_else(|| BackendError::Fatal(format!("no scripted reply for {key:?}")))
    }

    fn label(&self) -> &str {
        "scripted"
    }
}
