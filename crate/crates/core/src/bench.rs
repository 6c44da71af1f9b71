//! Benchmark loading (JSONL, one entry per line) and the CSV import adapter.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ident::{split_identifier, validate_identifier_name, IdentKind};
use crate::postcheck::is_subsequence;

/// One benchmark row: an abbreviation occurrence with its reference expansion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkEntry {
    pub id: String,
    pub project: String,
    pub file_path: String,
    /// 1-based line of the occurrence within `file_path`.
    pub line: usize,
    pub identifier: String,
    pub kind: IdentKind,
    /// The abbreviated token of `identifier` this entry grades.
    pub abbreviation: String,
    pub reference_expansion: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kg_payload: Option<String>,
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: duplicate entry id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: {reason}")]
    InvalidEntry { line: usize, reason: String },
    #[error("CSV record {record}: {reason}")]
    InvalidCsvRecord { record: usize, reason: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// A parsed benchmark plus non-fatal data warnings.
#[derive(Debug, Clone)]
pub struct LoadedBenchmark {
    pub entries: Vec<BenchmarkEntry>,
    /// One message per entry that failed the subsequence sanity check.
    pub warnings: Vec<String>,
}

fn validate_entry(entry: &BenchmarkEntry, line: usize) -> Result<Option<String>, BenchError> {
    let fail = |reason: String| BenchError::InvalidEntry { line, reason };
    if entry.id.trim().is_empty() {
        return Err(fail("entry id is empty".to_string()));
    }
    if entry.line == 0 {
        return Err(fail("line numbers are 1-based; got 0".to_string()));
    }
    validate_identifier_name(&entry.identifier)
        .map_err(|e| fail(format!("identifier {:?}: {e}", entry.identifier)))?;
    let split = split_identifier(&entry.identifier)
        .map_err(|e| fail(format!("identifier {:?}: {e}", entry.identifier)))?;
    if !split.tokens.iter().any(|t| t.casing.is_word() && t.text == entry.abbreviation) {
        return Err(fail(format!(
            "abbreviation {:?} is not a token of identifier {:?}",
            entry.abbreviation, entry.identifier
        )));
    }
    if entry.reference_expansion.trim().is_empty() {
        return Err(fail("reference expansion is empty".to_string()));
    }

    let sane = is_subsequence(&entry.abbreviation, &entry.reference_expansion)
        .map_err(|_| fail("abbreviation is empty".to_string()))?;
    Ok((!sane).then(|| {
        format!(
            "entry {}: abbreviation {:?} is not a subsequence of its reference expansion {:?}",
            entry.id, entry.abbreviation, entry.reference_expansion
        )
    }))
}

/// Parse benchmark JSONL. Blank lines are ignored; any malformed or invalid
/// line fails the load with its line number. Entries whose reference
/// expansion fails the subsequence sanity check load with a warning.
pub fn load_benchmark_text(text: &str) -> Result<LoadedBenchmark, BenchError> {
    let mut entries = Vec::new();
    let mut warnings = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let entry: BenchmarkEntry =
            serde_json::from_str(raw).map_err(|source| BenchError::Parse { line, source })?;
        if !seen.insert(entry.id.clone()) {
            return Err(BenchError::DuplicateId { line, id: entry.id });
        }
        if let Some(warning) = validate_entry(&entry, line)? {
            warnings.push(warning);
        }
        entries.push(entry);
    }
    Ok(LoadedBenchmark { entries, warnings })
}

pub fn load_benchmark(path: &Path) -> Result<LoadedBenchmark, BenchError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| BenchError::Io { path: path.display().to_string(), source })?;
    load_benchmark_text(&text)
}

/// Validate entries that arrived already deserialized (e.g. in a request
/// body), enforcing the same invariants as the JSONL loader. The reported
/// "line" numbers are 1-based entry positions.
pub fn validate_entries(entries: &[BenchmarkEntry]) -> Result<Vec<String>, BenchError> {
    let mut warnings = Vec::new();
    let mut seen: HashSet<&str> = HashSet::new();
    for (i, entry) in entries.iter().enumerate() {
        let position = i + 1;
        if !seen.insert(entry.id.as_str()) {
            return Err(BenchError::DuplicateId { line: position, id: entry.id.clone() });
        }
        if let Some(warning) = validate_entry(entry, position)? {
            warnings.push(warning);
        }
    }
    Ok(warnings)
}

/// Serialize entries back to JSONL (one compact object per line).
pub fn to_jsonl(entries: &[BenchmarkEntry]) -> String {
    let mut out = String::new();
    for entry in entries {
        out.push_str(&serde_json::to_string(entry).expect("benchmark entries serialize"));
        out.push('\n');
    }
    out
}

/// Import the CSV layout `project,file_path,line,identifier,kind,abbreviation,
/// reference_expansion[,kg_payload]` (header row required). Entry ids are
/// generated from the record number: `e00001`, `e00002`, ...
pub fn import_csv(reader: impl std::io::Read) -> Result<LoadedBenchmark, BenchError> {
    let mut csv_reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = csv_reader.headers()?.clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    let required = |name: &str| {
        column(name).ok_or_else(|| BenchError::InvalidCsvRecord {
            record: 0,
            reason: format!("missing required column {name:?}"),
        })
    };
    let project_col = required("project")?;
    let file_col = required("file_path")?;
    let line_col = required("line")?;
    let identifier_col = required("identifier")?;
    let kind_col = required("kind")?;
    let abbr_col = required("abbreviation")?;
    let reference_col = required("reference_expansion")?;
    let kg_col = column("kg_payload");

    let mut entries = Vec::new();
    let mut warnings = Vec::new();
    for (i, record) in csv_reader.records().enumerate() {
        let record = record?;
        let number = i + 1;
        let fail = |reason: String| BenchError::InvalidCsvRecord { record: number, reason };
        let field = |col: usize| record.get(col).unwrap_or("").to_string();
        let line: usize = field(line_col)
            .parse()
            .map_err(|_| fail(format!("line {:?} is not a positive integer", field(line_col))))?;
        let kind: IdentKind =
            field(kind_col).parse().map_err(|e| fail(format!("kind: {e}")))?;
        let kg_payload = kg_col.map(|c| field(c)).filter(|s| !s.is_empty());
        let entry = BenchmarkEntry {
            id: format!("e{number:05}"),
            project: field(project_col),
            file_path: field(file_col),
            line,
            identifier: field(identifier_col),
            kind,
            abbreviation: field(abbr_col),
            reference_expansion: field(reference_col),
            kg_payload,
        };
        if let Some(warning) = validate_entry(&entry, number)
            .map_err(|e| fail(e.to_string()))?
        {
            warnings.push(warning);
        }
        entries.push(entry);
    }
    Ok(LoadedBenchmark { entries, warnings })
}
