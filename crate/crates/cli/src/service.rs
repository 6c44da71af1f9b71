//! Pick the service a command talks to: a running one named by `--server` /
//! `ABBREX_SERVER_URL`, or an in-process server built from the backend flags
//! and torn down when the command finishes.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, ValueEnum};

use abbrex_client::AbbrexClient;
use abbrex_core::detect::{WordList, DEFAULT_KNOWN_TEXT, DEFAULT_WORDLIST_TEXT};
use abbrex_core::sha256_hex;
use abbrex_llm::{
    Gateway, GatewayConfig, LlmBackend, RemoteBackend, RemoteBackendConfig, ScriptedBackend,
};
use abbrex_server::{spawn_local, AppState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendKind {
    /// OpenAI-compatible HTTP API named by ABBREX_API_URL and ABBREX_MODEL
    Remote,
    /// Canned replies from --fixtures; for offline runs and tests
    Scripted,
}

/// Flags that shape the in-process service. They have no effect when
/// `--server` points at a running one, which keeps its own configuration.
#[derive(Debug, Args)]
pub struct BackendArgs {
    /// Model backend (in-process service only)
    #[arg(long, value_enum, default_value_t = BackendKind::Remote)]
    pub backend: BackendKind,
    /// Scripted replies, JSONL (in-process service only)
    #[arg(long)]
    pub fixtures: Option<PathBuf>,
    /// Dictionary file, one word per line; default is the shipped list
    #[arg(long)]
    pub wordlist: Option<PathBuf>,
    /// Known-abbreviation map, one abbr<TAB>expansion per line
    #[arg(long)]
    pub known: Option<PathBuf>,
    /// Concurrent model requests (in-process service only)
    #[arg(long, default_value_t = 4)]
    pub parallel: usize,
    /// Model request cap for this invocation (in-process service only)
    #[arg(long, default_value_t = 5_000)]
    pub budget: u64,
}

#[derive(Debug, Args)]
pub struct ServiceArgs {
    /// Base URL of a running service; default is an in-process one
    #[arg(long, env = "ABBREX_SERVER_URL")]
    pub server: Option<String>,
    #[command(flatten)]
    pub backend: BackendArgs,
}

fn build_backend(
    kind: BackendKind,
    fixtures: Option<&Path>,
) -> Result<Arc<dyn LlmBackend>, String> {
    match kind {
        BackendKind::Scripted => {
            let backend = match fixtures {
                Some(path) => ScriptedBackend::from_jsonl_path(path)
                    .map_err(|e| format!("loading {}: {e}", path.display()))?,
                None => ScriptedBackend::new(HashMap::new()),
            };
            Ok(Arc::new(backend))
        }
        BackendKind::Remote => {
            let config = RemoteBackendConfig::from_env().map_err(|e| e.to_string())?;
            Ok(Arc::new(RemoteBackend::new(config).map_err(|e| e.to_string())?))
        }
    }
}

/// Load the dictionary and abbreviation map, and hash the text that made
/// them so reports can name the exact list they ran with.
pub fn build_words(
    wordlist: Option<&Path>,
    known: Option<&Path>,
) -> Result<(Arc<WordList>, String), String> {
    let (words, mut hashed) = match wordlist {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("reading {}: {e}", path.display()))?;
            (WordList::from_text(&text).map_err(|e| e.to_string())?, text)
        }
        None => (
            WordList::from_text(DEFAULT_WORDLIST_TEXT).expect("shipped wordlist is well-formed"),
            DEFAULT_WORDLIST_TEXT.to_string(),
        ),
    };
    let words = match known {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("reading {}: {e}", path.display()))?;
            hashed.push_str(&text);
            words.with_known_text(&text).map_err(|e| e.to_string())?
        }
        // A custom wordlist stands alone; the shipped map only rides along
        // with the shipped list.
        None if wordlist.is_none() => {
            hashed.push_str(DEFAULT_KNOWN_TEXT);
            words
                .with_known_text(DEFAULT_KNOWN_TEXT)
                .expect("shipped abbreviation map is well-formed")
        }
        None => words,
    };
    Ok((Arc::new(words), sha256_hex(hashed.as_bytes())))
}

pub fn build_state(args: &BackendArgs) -> Result<Arc<AppState>, String> {
    let backend = build_backend(args.backend, args.fixtures.as_deref())?;
    let (words, wordlist_sha256) = build_words(args.wordlist.as_deref(), args.known.as_deref())?;
    let gateway = Gateway::new(
        backend,
        GatewayConfig {
            parallelism: args.parallel,
            request_budget: args.budget,
            ..GatewayConfig::default()
        },
    )
    .map_err(|e| e.to_string())?;
    Ok(AppState::new(Arc::new(gateway), words, wordlist_sha256))
}

/// A client plus, when no `--server` was given, the in-process server task
/// kept alive behind it.
pub struct Connection {
    pub client: AbbrexClient,
    _server: Option<tokio::task::JoinHandle<std::io::Result<()>>>,
}

impl Connection {
    pub async fn open(args: &ServiceArgs) -> Result<Self, String> {
        match &args.server {
            Some(url) => Ok(Connection { client: AbbrexClient::new(url.clone()), _server: None }),
            None => Self::start(build_state(&args.backend)?).await,
        }
    }

    /// A connection for commands that never call the model (detection is
    /// dictionary work): in-process, backed by an empty scripted backend, so
    /// no credentials are needed.
    pub async fn open_lexical(
        server: Option<&str>,
        wordlist: Option<&Path>,
        known: Option<&Path>,
    ) -> Result<Self, String> {
        if let Some(url) = server {
            return Ok(Connection { client: AbbrexClient::new(url), _server: None });
        }
        let backend: Arc<dyn LlmBackend> = Arc::new(ScriptedBackend::new(HashMap::new()));
        let (words, wordlist_sha256) = build_words(wordlist, known)?;
        let gateway =
            Gateway::new(backend, GatewayConfig::default()).map_err(|e| e.to_string())?;
        Self::start(AppState::new(Arc::new(gateway), words, wordlist_sha256)).await
    }

    async fn start(state: Arc<AppState>) -> Result<Self, String> {
        let (url, handle) = spawn_local(state)
            .await
            .map_err(|e| format!("starting the in-process service: {e}"))?;
        Ok(Connection { client: AbbrexClient::new(url), _server: Some(handle) })
    }
}
