//! Run the pipeline over many occurrences: resolve benchmark entries to
//! located occurrences, fan out up to the gateway's parallelism, and collect
//! deterministically ordered results.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};

use abbrex_core::bench::BenchmarkEntry;
use abbrex_core::detect::{detect, WordList};
use abbrex_core::ident::{IdentifierOccurrence, SourceDocument};
use abbrex_core::score::EntryResult;
use abbrex_llm::Gateway;

use crate::{all_missed_result, expand_occurrence, PipelineConfig};

/// One unit of batch work: a benchmark entry resolved to an occurrence.
#[derive(Debug, Clone)]
pub struct BatchItem {
    pub entry_id: String,
    pub occurrence: IdentifierOccurrence,
    pub kg_payload: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryError {
    pub entry_id: String,
    pub message: String,
}

#[derive(Debug)]
pub struct BatchOutcome {
    /// One result per finished entry, sorted by (path, line, name, id).
    pub results: Vec<EntryResult>,
    /// Entries that failed individually; each also has an all-missed result.
    pub errors: Vec<EntryError>,
    /// The request budget tripped: `results` covers only the entries that
    /// finished before the stop.
    pub budget_exhausted: bool,
}

/// Map a file extension to the language tag used in prompts.
pub fn language_tag(path: &str) -> &str {
    match Path::new(path).extension().and_then(|e| e.to_str()) {
        Some("java") => "java",
        Some("rs") => "rust",
        Some("py") => "python",
        Some("js") => "javascript",
        Some("ts") => "typescript",
        Some("c") | Some("h") => "c",
        Some("cpp") | Some("cc") | Some("hpp") => "cpp",
        Some(other) => other,
        None => "text",
    }
}

/// Benchmark entries turned into runnable items, plus resolution warnings.
#[derive(Debug, Clone)]
pub struct ResolvedBatch {
    pub items: Vec<BatchItem>,
    pub warnings: Vec<String>,
}

fn resolve_with<F>(entries: &[BenchmarkEntry], mut fetch: F) -> ResolvedBatch
where
    F: FnMut(&str, &mut Vec<String>) -> Option<Arc<SourceDocument>>,
{
    let mut documents: HashMap<String, Option<Arc<SourceDocument>>> = HashMap::new();
    let mut items = Vec::with_capacity(entries.len());
    let mut warnings = Vec::new();

    for entry in entries {
        let document = match documents.get(&entry.file_path) {
            Some(cached) => cached.clone(),
            None => {
                let fetched = fetch(&entry.file_path, &mut warnings);
                documents.insert(entry.file_path.clone(), fetched.clone());
                fetched
            }
        };

        let occurrence = match document {
            Some(doc) => {
                IdentifierOccurrence::in_document(&entry.identifier, entry.kind, doc, entry.line)
                    .unwrap_or_else(|e| {
                        warnings.push(format!("entry {}: {e}", entry.id));
                        IdentifierOccurrence::bare(&entry.identifier, entry.kind)
                            .expect("benchmark identifiers are validated on load")
                    })
            }
            None => IdentifierOccurrence::bare(&entry.identifier, entry.kind)
                .expect("benchmark identifiers are validated on load"),
        };
        items.push(BatchItem {
            entry_id: entry.id.clone(),
            occurrence,
            kg_payload: entry.kg_payload.clone(),
        });
    }
    ResolvedBatch { items, warnings }
}

/// Resolve benchmark entries against an on-disk source tree. A file that
/// cannot be read, or a line outside the file, degrades the entry to a
/// location-free occurrence (context modes that need the document will then
/// fail that entry at run time) and is reported as a warning.
pub fn resolve_entries(entries: &[BenchmarkEntry], source_root: &Path) -> ResolvedBatch {
    resolve_with(entries, |file_path, warnings| {
        let path = source_root.join(file_path);
        match std::fs::read_to_string(&path) {
            Ok(text) => Some(Arc::new(SourceDocument::from_text(
                file_path.to_string(),
                &text,
                language_tag(file_path),
            ))),
            Err(e) => {
                warnings.push(format!("{}: {e}", path.display()));
                None
            }
        }
    })
}

/// Resolve benchmark entries against documents supplied in memory (keyed by
/// the entries' `file_path`), as when document text travels inside a request.
pub fn resolve_entries_inline(
    entries: &[BenchmarkEntry],
    documents: &HashMap<String, Arc<SourceDocument>>,
) -> ResolvedBatch {
    resolve_with(entries, |file_path, warnings| match documents.get(file_path) {
        Some(doc) => Some(doc.clone()),
        None => {
            warnings.push(format!("{file_path}: no document supplied"));
            None
        }
    })
}

/// Sort results by (document path, line, identifier, entry id).
pub fn sort_results(results: &mut [EntryResult]) {
    results.sort_by(|a, b| {
        let key = |r: &EntryResult| {
            (
                r.result.occurrence.path.clone(),
                r.result.occurrence.line,
                r.result.occurrence.name.clone(),
                r.entry_id.clone(),
            )
        };
        key(a).cmp(&key(b))
    });
}

/// Expand every item, up to the gateway's parallelism limit at a time.
///
/// A failing item is recorded and graded as all-missed; budget exhaustion
/// stops the batch and returns whatever finished.
pub async fn run_batch(
    items: &[BatchItem],
    cfg: &PipelineConfig,
    gateway: &Gateway,
    words: &WordList,
) -> BatchOutcome {
    let concurrency = gateway.parallelism().max(1);
    // Futures are built eagerly: a closure returning an async block that
    // borrows its argument does not satisfy the higher-ranked bound stream
    // adapters need.
    let tasks: Vec<_> = items
        .iter()
        .map(|item| async move {
            let outcome = expand_occurrence(
                &item.occurrence,
                cfg,
                gateway,
                words,
                item.kg_payload.as_deref(),
            )
            .await;
            (item, outcome)
        })
        .collect();
    let mut in_flight = stream::iter(tasks).buffer_unordered(concurrency);

    let mut results = Vec::with_capacity(items.len());
    let mut errors = Vec::new();
    let mut budget_exhausted = false;
    while let Some((item, outcome)) = in_flight.next().await {
        match outcome {
            Ok(result) => {
                results.push(EntryResult { entry_id: item.entry_id.clone(), result });
            }
            Err(e) if e.is_budget_exhausted() => {
                budget_exhausted = true;
                break;
            }
            Err(e) => {
                errors.push(EntryError { entry_id: item.entry_id.clone(), message: e.to_string() });
                let candidates = detect(&item.occurrence.split(), words, &cfg.detect);
                results.push(EntryResult {
                    entry_id: item.entry_id.clone(),
                    result: all_missed_result(&item.occurrence, &candidates, 1),
                });
            }
        }
    }
    drop(in_flight);

    sort_results(&mut results);
    errors.sort_by(|a, b| a.entry_id.cmp(&b.entry_id));
    BatchOutcome { results, errors, budget_exhausted }
}
