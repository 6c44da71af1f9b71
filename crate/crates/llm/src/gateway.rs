//! Shared front door for completion backends: bounded parallelism, a hard
//! request budget, transient-failure retries, and repetition voting.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use thiserror::Error;
use tokio::sync::Semaphore;

use crate::backend::{BackendError, LlmBackend, LlmRequest, LlmResponse};
use crate::parse::parse_reply;

#[derive(Debug, Clone)]
pub struct GatewayConfig {
    /// Extra attempts after the first, for transient transport failures only.
    pub max_retries: u32,
    pub initial_backoff_ms: u64,
    /// Maximum in-flight requests.
    pub parallelism: usize,
    /// Hard cap on backend attempts per gateway instance.
    pub request_budget: u64,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self { max_retries: 2, initial_backoff_ms: 250, parallelism: 4, request_budget: 5_000 }
    }
}

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("transport failed after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("authentication rejected: {0}")]
    Auth(String),
    #[error("backend failure: {0}")]
    Fatal(String),
    #[error("request budget of {budget} exhausted")]
    BudgetExceeded { budget: u64 },
    #[error("configuration error: {0}")]
    Config(String),
}

pub struct Gateway {
    backend: Arc<dyn LlmBackend>,
    config: GatewayConfig,
    semaphore: Semaphore,
    used: AtomicU64,
}

impl Gateway {
    pub fn new(backend: Arc<dyn LlmBackend>, config: GatewayConfig) -> Result<Self, LlmError> {
        if config.parallelism == 0 {
            return Err(LlmError::Config("parallelism must be at least 1".into()));
        }
        let semaphore = Semaphore::new(config.parallelism);
        Ok(Self { backend, config, semaphore, used: AtomicU64::new(0) })
    }

    pub fn backend_label(&self) -> &str {
        self.backend.label()
    }

    pub fn parallelism(&self) -> usize {
        self.config.parallelism
    }

    pub fn request_budget(&self) -> u64 {
        self.config.request_budget
    }

    /// Backend attempts charged so far, retries included.
    pub fn requests_used(&self) -> u64 {
        self.used.load(Ordering::SeqCst)
    }

    fn charge_one_attempt(&self) -> Result<(), LlmError> {
        let budget = self.config.request_budget;
        self.used
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |used| {
                (used < budget).then_some(used + 1)
            })
            .map(|_| ())
            .map_err(|_| LlmError::BudgetExceeded { budget })
    }

    /// One completion: waits for a parallelism slot, charges the budget per
    /// attempt, retries transient failures with exponential backoff, and
    /// parses the reply. An unparseable reply is not an error — the response
    /// carries the raw text with `parsed_identifier` absent.
    pub async fn complete(&self, request: &LlmRequest) -> Result<LlmResponse, LlmError> {
        let _permit = self
            .semaphore
            .acquire()
            .await
            .map_err(|_| LlmError::Config("gateway semaphore closed".into()))?;
        let mut attempt: u32 = 0;
        loop {
            attempt += 1;
            self.charge_one_attempt()?;
            let started = Instant::now();
            match self.backend.send(request).await {
                Ok(raw_text) => {
                    let latency_ms = started.elapsed().as_secs_f64() * 1_000.0;
                    let parsed_identifier = parse_reply(&raw_text);
                    return Ok(LlmResponse { raw_text, parsed_identifier, latency_ms, attempt });
                }
                Err(BackendError::Auth(message)) => return Err(LlmError::Auth(message)),
                Err(BackendError::Fatal(message)) => return Err(LlmError::Fatal(message)),
                Err(BackendError::Transient(message)) => {
                    if attempt > self.config.max_retries {
                        return Err(LlmError::Transport { attempts: attempt, message });
                    }
                    let factor = 1u64 << (attempt - 1).min(16);
                    let delay = self.config.initial_backoff_ms.saturating_mul(factor);
                    tokio::time::sleep(Duration::from_millis(delay)).await;
                }
            }
        }
    }

    /// Issues the request `runs` times and returns the response whose parsed
    /// identifier won the vote. Ties break toward the earliest run;
    /// unparseable replies don't vote; if nothing parses, the first response
    /// is returned as-is.
    pub async fn complete_with_voting(
        &self,
        request: &LlmRequest,
        runs: u32,
    ) -> Result<LlmResponse, LlmError> {
        if runs == 0 {
            return Err(LlmError::Config("voting needs at least one run".into()));
        }
        if runs == 1 {
            return self.complete(request).await;
        }
        let mut responses = Vec::with_capacity(runs as usize);
        for _ in 0..runs {
            responses.push(self.complete(request).await?);
        }
        let mut tally: Vec<(&str, usize)> = Vec::new();
        for response in &responses {
            if let Some(parsed) = response.parsed_identifier.as_deref() {
                match tally.iter_mut().find(|(text, _)| *text == parsed) {
                    Some((_, count)) => *count += 1,
                    None => tally.push((parsed, 1)),
                }
            }
        }
        let mut winner: Option<String> = None;
        let mut best = 0usize;
        for (text, count) in &tally {
            if *count > best {
                best = *count;
                winner = Some((*text).to_string());
            }
        }
        let chosen = match winner {
            Some(text) => responses
                .iter()
                .position(|r| r.parsed_identifier.as_deref() == Some(text.as_str()))
                .expect("winner came from these responses"),
            None => 0,
        };
        Ok(responses.swap_remove(chosen))
    }
}
