//! `abbrex` — expand abbreviated source-code identifiers from the command
//! line. Every command talks HTTP to the expansion service: either a running
//! one named by `--server` / `ABBREX_SERVER_URL`, or an in-process one
//! started just for the invocation. Stdout carries only the report payload;
//! progress, warnings, and the reproducibility header go to stderr.

mod service;

use std::collections::HashSet;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use abbrex_api::{DetectRequest, EvaluateRequest, ExpandRequest, InlineDocument};
use abbrex_client::{AbbrexClient, ClientError};
use abbrex_core::bench::{import_csv, load_benchmark_text, to_jsonl, BenchmarkEntry};
use abbrex_core::context::{ContextConfig, ContextMode};
use abbrex_core::detect::DetectConfig;
use abbrex_core::expansion::AbbrevStatus;
use abbrex_core::ident::IdentKind;
use abbrex_core::score::{display_pct, render_table, EvalReport};
use abbrex_core::sha256_hex;
use abbrex_pipeline::{language_tag, EvaluationOutcome, PipelineConfig, Rounds};

use service::{BackendArgs, Connection, ServiceArgs};

const EXIT_OK: u8 = 0;
/// Bad input, I/O trouble, or a failure talking to the service or model.
const EXIT_ERROR: u8 = 2;
/// Expansion finished but every flagged abbreviation is still abbreviated.
const EXIT_ALL_MISSED: u8 = 3;
/// The request budget ran out; any report written covers what finished.
const EXIT_BUDGET: u8 = 4;

#[derive(Parser)]
#[command(name = "abbrex", version, about = "Expand abbreviated source-code identifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split an identifier and flag likely abbreviations
    Detect(DetectArgs),
    /// Expand one identifier occurrence in a source file
    Expand(ExpandArgs),
    /// Run a benchmark and report precision, recall, and F1
    Evaluate(EvaluateArgs),
    /// Convert a CSV benchmark into the JSONL format
    ImportBenchmark(ImportArgs),
    /// Run the HTTP service in the foreground
    Serve(ServeArgs),
}

#[derive(Args)]
struct DetectArgs {
    /// Identifier to split, e.g. `textEvt`
    identifier: String,
    /// What the identifier names
    #[arg(long, default_value = "VariableName", value_parser = parse_kind)]
    kind: IdentKind,
    /// Base URL of a running service; default is an in-process one
    #[arg(long, env = "ABBREX_SERVER_URL")]
    server: Option<String>,
    /// Dictionary file, one word per line; default is the shipped list
    #[arg(long)]
    wordlist: Option<PathBuf>,
    /// Known-abbreviation map, one abbr<TAB>expansion per line
    #[arg(long)]
    known: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    /// Code context sent with each model request
    #[arg(long, value_enum, default_value_t = ContextChoice::Window)]
    context: ContextChoice,
    /// Lines kept on each side of the occurrence for --context window
    #[arg(long, default_value_t = 3)]
    window: usize,
    /// Expansion rounds; round two re-asks with missed abbreviations marked
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2), default_value_t = 2)]
    rounds: u8,
    /// Check each proposal contains its abbreviation as a subsequence (default)
    #[arg(long, overrides_with = "no_postcheck")]
    postcheck: bool,
    /// Keep proposals even when the subsequence check fails
    #[arg(long, overrides_with = "postcheck")]
    no_postcheck: bool,
    /// Model calls per request; the most common reply wins
    #[arg(long, default_value_t = 1)]
    runs: u32,
}

#[derive(Clone, Copy, ValueEnum)]
enum ContextChoice {
    /// No code context
    None,
    /// The whole enclosing file, occurrence line marked
    File,
    /// A window of lines around the occurrence
    Window,
    /// A prebuilt knowledge-graph payload per entry
    Kg,
}

impl ContextChoice {
    fn mode(self) -> ContextMode {
        match self {
            ContextChoice::None => ContextMode::None,
            ContextChoice::File => ContextMode::EnclosingFile,
            ContextChoice::Window => ContextMode::SurroundingCode,
            ContextChoice::Kg => ContextMode::KnowledgeGraph,
        }
    }
}

impl PipelineArgs {
    fn to_config(&self) -> PipelineConfig {
        PipelineConfig {
            context: ContextConfig {
                mode: self.context.mode(),
                window_radius: self.window,
                ..ContextConfig::default()
            },
            rounds: if self.rounds == 1 { Rounds::One } else { Rounds::Two },
            postcheck: !self.no_postcheck,
            voting_runs: self.runs,
            ..PipelineConfig::default()
        }
    }
}

#[derive(Args)]
struct ExpandArgs {
    /// Source file containing the occurrence
    #[arg(long)]
    file: PathBuf,
    /// 1-based line of the occurrence
    #[arg(long)]
    line: usize,
    /// Identifier on that line; default is the first with flagged abbreviations
    identifier: Option<String>,
    /// What the identifier names
    #[arg(long, default_value = "VariableName", value_parser = parse_kind)]
    kind: IdentKind,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[command(flatten)]
    service: ServiceArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    /// Aligned text table
    Table,
    /// The full evaluation outcome as JSON (reusable as --baseline-report)
    Json,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Benchmark file, JSONL with one entry per line
    benchmark: PathBuf,
    /// Directory the benchmark's file paths resolve against
    /// (default: the benchmark's own directory)
    #[arg(long)]
    source_root: Option<PathBuf>,
    /// Full evaluation passes to run and average
    #[arg(long, default_value_t = 1)]
    repeats: u32,
    /// Earlier JSON report to diff against (table format only)
    #[arg(long)]
    baseline_report: Option<PathBuf>,
    /// Report format
    #[arg(long, value_enum, default_value_t = ReportFormat::Table)]
    format: ReportFormat,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[command(flatten)]
    service: ServiceArgs,
}

#[derive(Args)]
struct ImportArgs {
    /// CSV benchmark to convert
    csv: PathBuf,
    /// Write the JSONL here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    /// Address to listen on
    #[arg(long, default_value = "127.0.0.1:8080")]
    listen: String,
    #[command(flatten)]
    backend: BackendArgs,
}

fn parse_kind(s: &str) -> Result<IdentKind, String> {
    s.parse().map_err(|e| {
        format!(
            "{e} (expected VariableName, MethodName, ClassName, ParameterName, FieldName, or Other)"
        )
    })
}

#[tokio::main]
async fn main() -> ExitCode {
    let cli = Cli::parse();
    let default_level = if matches!(cli.command, Command::Serve(_)) { "info" } else { "warn" };
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| default_level.into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let code = match cli.command {
        Command::Detect(args) => cmd_detect(args).await,
        Command::Expand(args) => cmd_expand(args).await,
        Command::Evaluate(args) => cmd_evaluate(args).await,
        Command::ImportBenchmark(args) => cmd_import(args),
        Command::Serve(args) => cmd_serve(args).await,
    };
    ExitCode::from(code)
}

fn fail(code: u8, message: impl Display) -> u8 {
    eprintln!("abbrex: {message}");
    code
}

fn client_failure(err: &ClientError) -> u8 {
    if err.status() == Some(429) {
        EXIT_BUDGET
    } else {
        EXIT_ERROR
    }
}

/// The model named by a gateway label like `remote:gpt-4o` or `scripted`.
fn model_name(backend_label: &str) -> &str {
    backend_label.split_once(':').map_or(backend_label, |(_, model)| model)
}

/// Stderr header naming everything needed to rerun this invocation.
async fn print_header(
    client: &AbbrexClient,
    config_json: &str,
    benchmark: Option<(&Path, &str)>,
) -> Result<(), ClientError> {
    let health = client.health().await?;
    eprintln!(
        "abbrex: backend={} model={} wordlist_sha256={}",
        health.backend,
        model_name(&health.backend),
        health.wordlist_sha256
    );
    if let Some((path, hash)) = benchmark {
        eprintln!("abbrex: benchmark={} benchmark_sha256={hash}", path.display());
    }
    eprintln!("abbrex: config={config_json}");
    Ok(())
}

async fn cmd_detect(args: DetectArgs) -> u8 {
    let connection = match Connection::open_lexical(
        args.server.as_deref(),
        args.wordlist.as_deref(),
        args.known.as_deref(),
    )
    .await
    {
        Ok(connection) => connection,
        Err(e) => return fail(EXIT_ERROR, e),
    };
    let config_json =
        serde_json::to_string(&DetectConfig::default()).expect("detect config serializes");
    if let Err(e) = print_header(&connection.client, &config_json, None).await {
        return fail(client_failure(&e), e);
    }

    let request =
        DetectRequest { identifier: args.identifier, kind: args.kind, detect: None };
    match connection.client.detect(&request).await {
        Ok(response) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&response).expect("detect responses serialize")
            );
            EXIT_OK
        }
        Err(e) => fail(client_failure(&e), e),
    }
}

/// Identifier-shaped tokens on a line, in order, deduplicated.
fn identifiers_on(line: &str) -> Vec<String> {
    let mut names: Vec<String> = Vec::new();
    let mut token = String::new();
    for ch in line.chars().chain(std::iter::once(' ')) {
        if ch.is_ascii_alphanumeric() || ch == '_' || ch == '$' {
            token.push(ch);
            continue;
        }
        if !token.is_empty() {
            let named = !token.starts_with(|c: char| c.is_ascii_digit());
            if named && !names.iter().any(|n| n == &token) {
                names.push(std::mem::take(&mut token));
            }
            token.clear();
        }
    }
    names
}

/// The first name on the line the service flags as containing abbreviations.
async fn first_flagged(
    client: &AbbrexClient,
    names: &[String],
    kind: IdentKind,
) -> Result<Option<String>, ClientError> {
    for name in names {
        let request = DetectRequest { identifier: name.clone(), kind, detect: None };
        match client.detect(&request).await {
            Ok(response) if !response.candidates.is_empty() => return Ok(Some(name.clone())),
            Ok(_) => {}
            // Tokens the service refuses to split are simply not candidates.
            Err(e) if e.status() == Some(422) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(None)
}

async fn cmd_expand(args: ExpandArgs) -> u8 {
    let text = match std::fs::read_to_string(&args.file) {
        Ok(text) => text,
        Err(e) => return fail(EXIT_ERROR, format!("reading {}: {e}", args.file.display())),
    };
    let lines: Vec<&str> = text.lines().collect();
    if args.line == 0 || args.line > lines.len() {
        return fail(
            EXIT_ERROR,
            format!(
                "{} has {} lines; --line {} is out of range",
                args.file.display(),
                lines.len(),
                args.line
            ),
        );
    }
    let names = identifiers_on(lines[args.line - 1]);

    let connection = match Connection::open(&args.service).await {
        Ok(connection) => connection,
        Err(e) => return fail(EXIT_ERROR, e),
    };
    let config = args.pipeline.to_config();
    let config_json = serde_json::to_string(&config).expect("pipeline config serializes");
    if let Err(e) = print_header(&connection.client, &config_json, None).await {
        return fail(client_failure(&e), e);
    }

    let target = match &args.identifier {
        Some(name) => {
            if !names.iter().any(|n| n == name) {
                return fail(
                    EXIT_ERROR,
                    format!(
                        "identifier {name:?} does not occur on line {} of {}",
                        args.line,
                        args.file.display()
                    ),
                );
            }
            name.clone()
        }
        None => match first_flagged(&connection.client, &names, args.kind).await {
            Ok(Some(name)) => name,
            Ok(None) => {
                return fail(
                    EXIT_ERROR,
                    format!(
                        "no identifier with flagged abbreviations on line {} of {}",
                        args.line,
                        args.file.display()
                    ),
                )
            }
            Err(e) => return fail(client_failure(&e), e),
        },
    };

    let path = args.file.display().to_string();
    let document = InlineDocument {
        language: Some(language_tag(&path).to_string()),
        path,
        text,
    };
    let request = ExpandRequest {
        identifier: target,
        kind: args.kind,
        document: Some(document),
        line: Some(args.line),
        kg_payload: None,
        config: Some(config),
    };
    match connection.client.expand(&request).await {
        Ok(response) => {
            eprintln!("abbrex: requests_used={}", response.requests_used);
            println!(
                "{}",
                serde_json::to_string_pretty(&response.result)
                    .expect("expansion results serialize")
            );
            let flagged = !response.result.per_abbrev.is_empty();
            let expanded_any = response
                .result
                .per_abbrev
                .iter()
                .any(|p| p.status == AbbrevStatus::Expanded);
            if flagged && !expanded_any {
                EXIT_ALL_MISSED
            } else {
                EXIT_OK
            }
        }
        Err(e) => fail(client_failure(&e), e),
    }
}

/// Read each benchmark file once from under `source_root`; files that are
/// missing locally are left to the service to report.
fn inline_documents(entries: &[BenchmarkEntry], source_root: &Path) -> Vec<InlineDocument> {
    let mut seen: HashSet<&str> = HashSet::new();
    let mut documents = Vec::new();
    for entry in entries {
        if !seen.insert(&entry.file_path) {
            continue;
        }
        let Ok(text) = std::fs::read_to_string(source_root.join(&entry.file_path)) else {
            continue;
        };
        documents.push(InlineDocument {
            path: entry.file_path.clone(),
            text,
            language: Some(language_tag(&entry.file_path).to_string()),
        });
    }
    documents
}

fn load_baseline(path: &Path) -> Result<EvalReport, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("reading {}: {e}", path.display()))?;
    let outcome: EvaluationOutcome = serde_json::from_str(&text)
        .map_err(|e| format!("{} is not a JSON evaluation report: {e}", path.display()))?;
    let run = outcome
        .runs
        .first()
        .ok_or_else(|| format!("{} contains no runs to compare against", path.display()))?;
    Ok(run.report.clone())
}

fn render_report(outcome: &EvaluationOutcome, baseline: Option<&EvalReport>) -> String {
    let runs: Vec<(String, &EvalReport)> = outcome
        .runs
        .iter()
        .enumerate()
        .map(|(i, run)| (format!("run {}", i + 1), &run.report))
        .collect();
    let mut out = render_table(&runs, baseline);
    if outcome.runs.len() > 1 {
        out.push_str(&format!(
            "mean over {} runs: precision {}% recall {}% F1 {}%\n",
            outcome.runs.len(),
            display_pct(outcome.mean.precision),
            display_pct(outcome.mean.recall),
            display_pct(outcome.mean.f1),
        ));
    }
    out
}

async fn cmd_evaluate(args: EvaluateArgs) -> u8 {
    let bytes = match std::fs::read(&args.benchmark) {
        Ok(bytes) => bytes,
        Err(e) => return fail(EXIT_ERROR, format!("reading {}: {e}", args.benchmark.display())),
    };
    let benchmark_hash = sha256_hex(&bytes);
    let text = match String::from_utf8(bytes) {
        Ok(text) => text,
        Err(e) => return fail(EXIT_ERROR, format!("{}: {e}", args.benchmark.display())),
    };
    let loaded = match load_benchmark_text(&text) {
        Ok(loaded) => loaded,
        Err(e) => return fail(EXIT_ERROR, format!("{}: {e}", args.benchmark.display())),
    };
    for warning in &loaded.warnings {
        eprintln!("abbrex: warning: {warning}");
    }

    let baseline = match &args.baseline_report {
        Some(path) if args.format == ReportFormat::Table => match load_baseline(path) {
            Ok(report) => Some(report),
            Err(e) => return fail(EXIT_ERROR, e),
        },
        Some(_) => {
            eprintln!("abbrex: warning: --baseline-report only annotates the table format");
            None
        }
        None => None,
    };

    let source_root = args.source_root.clone().unwrap_or_else(|| {
        args.benchmark.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."))
    });
    let documents = inline_documents(&loaded.entries, &source_root);

    let connection = match Connection::open(&args.service).await {
        Ok(connection) => connection,
        Err(e) => return fail(EXIT_ERROR, e),
    };
    let config = args.pipeline.to_config();
    let config_json = serde_json::to_string(&config).expect("pipeline config serializes");
    if let Err(e) =
        print_header(&connection.client, &config_json, Some((&args.benchmark, &benchmark_hash)))
            .await
    {
        return fail(client_failure(&e), e);
    }

    let request = EvaluateRequest {
        entries: loaded.entries,
        documents,
        config: Some(config),
        matching: None,
        repeats: args.repeats,
    };
    let response = match connection.client.evaluate(&request).await {
        Ok(response) => response,
        Err(e) => return fail(client_failure(&e), e),
    };
    eprintln!("abbrex: requests_used={}", response.requests_used);
    let outcome = response.outcome;
    for warning in &outcome.resolve_warnings {
        eprintln!("abbrex: warning: {warning}");
    }
    for (i, run) in outcome.runs.iter().enumerate() {
        for error in &run.entry_errors {
            eprintln!("abbrex: warning: run {} entry {}: {}", i + 1, error.entry_id, error.message);
        }
    }

    let payload = match args.format {
        ReportFormat::Json => {
            let mut json =
                serde_json::to_string_pretty(&outcome).expect("evaluation outcomes serialize");
            json.push('\n');
            json
        }
        ReportFormat::Table => render_report(&outcome, baseline.as_ref()),
    };
    if let Some(path) = &args.out {
        if let Err(e) = std::fs::write(path, &payload) {
            return fail(EXIT_ERROR, format!("writing {}: {e}", path.display()));
        }
        eprintln!("abbrex: report written to {}", path.display());
    } else {
        print!("{payload}");
    }
    if outcome.budget_exhausted {
        fail(EXIT_BUDGET, "request budget exhausted; the report covers the entries that finished")
    } else {
        EXIT_OK
    }
}

fn cmd_import(args: ImportArgs) -> u8 {
    let file = match std::fs::File::open(&args.csv) {
        Ok(file) => file,
        Err(e) => return fail(EXIT_ERROR, format!("opening {}: {e}", args.csv.display())),
    };
    let loaded = match import_csv(file) {
        Ok(loaded) => loaded,
        Err(e) => return fail(EXIT_ERROR, format!("{}: {e}", args.csv.display())),
    };
    for warning in &loaded.warnings {
        eprintln!("abbrex: warning: {warning}");
    }
    eprintln!("abbrex: imported {} entries", loaded.entries.len());
    let jsonl = to_jsonl(&loaded.entries);
    match &args.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, jsonl) {
                return fail(EXIT_ERROR, format!("writing {}: {e}", path.display()));
            }
        }
        None => print!("{jsonl}"),
    }
    EXIT_OK
}

async fn cmd_serve(args: ServeArgs) -> u8 {
    let state = match service::build_state(&args.backend) {
        Ok(state) => state,
        Err(e) => return fail(EXIT_ERROR, e),
    };
    let listener = match tokio::net::TcpListener::bind(&args.listen).await {
        Ok(listener) => listener,
        Err(e) => return fail(EXIT_ERROR, format!("binding {}: {e}", args.listen)),
    };
    match abbrex_server::serve(listener, state).await {
        Ok(()) => EXIT_OK,
        Err(e) => fail(EXIT_ERROR, e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexes_identifiers_in_order_without_duplicates_or_numbers() {
        let names = identifiers_on("long wt = waitTime + 42 * wt; // $ref 9th _tmp");
        assert_eq!(names, ["long", "wt", "waitTime", "$ref", "_tmp"]);
    }

    #[test]
    fn model_name_strips_the_backend_prefix() {
        assert_eq!(model_name("remote:gpt-4o"), "gpt-4o");
        assert_eq!(model_name("scripted"), "scripted");
    }
}
