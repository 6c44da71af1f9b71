//! Precision/recall/F1 accounting over expansion results, plus the table and
//! delta rendering used by reports.
//!
//! Counting follows the per-abbreviation scheme: an abbreviation is
//! *expanded* when a proposal differing from it survived (post-revert), and
//! *correct* when that proposal matches the reference expansion under the
//! configured normalization. Proposals reverted by the post-condition count
//! as missed; their detected violations are tallied separately.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bench::BenchmarkEntry;
use crate::expansion::{AbbrevStatus, ExpansionResult};
use crate::ident::split_identifier;

/// One pipeline result tagged with the benchmark entry it answers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryResult {
    pub entry_id: String,
    pub result: ExpansionResult,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounts {
    /// Total graded abbreviations (the recall denominator).
    pub total: u64,
    pub expanded: u64,
    pub correct: u64,
    pub incorrect: u64,
    pub missed: u64,
    /// Post-condition violations detected (before reverting).
    pub violating: u64,
}

impl EvalCounts {
    pub fn from_confusion(total: u64, expanded: u64, correct: u64) -> Self {
        EvalCounts {
            total,
            expanded,
            correct,
            incorrect: expanded - correct,
            missed: total - expanded,
            violating: 0,
        }
    }
}

/// How proposals are compared against reference expansions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchConfig {
    pub case_insensitive: bool,
    /// Drop separators and digits before comparing, so `waitTime`,
    /// `wait_time`, and `WaitTime` all match.
    pub strip_non_alphanumeric: bool,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig { case_insensitive: true, strip_non_alphanumeric: true }
    }
}

impl MatchConfig {
    fn normalize(&self, s: &str) -> String {
        let mut out = String::with_capacity(s.len());
        for ch in s.chars() {
            if self.strip_non_alphanumeric && !ch.is_alphanumeric() {
                continue;
            }
            if self.case_insensitive {
                out.extend(ch.to_lowercase());
            } else {
                out.push(ch);
            }
        }
        out
    }

    pub fn matches(&self, proposed: &str, reference: &str) -> bool {
        self.normalize(proposed) == self.normalize(reference)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerEntryOutcome {
    pub entry_id: String,
    pub proposed: String,
    pub reference: String,
    /// Absent for missed abbreviations (nothing to grade).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correct: Option<bool>,
    pub status: AbbrevStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub counts: EvalCounts,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Sorted by entry id.
    pub per_entry: Vec<PerEntryOutcome>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScoreError {
    #[error("results do not cover the benchmark: missing {missing:?}, unexpected {unexpected:?}, duplicated {duplicated:?}")]
    IdMismatch {
        missing: Vec<String>,
        unexpected: Vec<String>,
        duplicated: Vec<String>,
    },
}

/// Precision, recall, and F1 from raw counts (exact, unrounded).
pub fn metrics_of(counts: &EvalCounts) -> (f64, f64, f64) {
    let precision = if counts.expanded == 0 {
        0.0
    } else {
        counts.correct as f64 / counts.expanded as f64
    };
    let recall = if counts.total == 0 { 0.0 } else { counts.correct as f64 / counts.total as f64 };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    (precision, recall, f1)
}

/// A fraction as the displayed integer percent (half rounds up).
pub fn display_pct(fraction: f64) -> u32 {
    (fraction * 100.0).round() as u32
}

/// The effective proposal for one graded abbreviation: the per-token record
/// when the pipeline has one, otherwise a conservative read of the final
/// identifier (positional on equal word counts, whole output for a
/// single-word identifier, else the abbreviation itself, i.e. missed).
fn effective_proposal(entry: &BenchmarkEntry, result: &ExpansionResult) -> (String, AbbrevStatus, bool) {
    let matched = result
        .per_abbrev
        .iter()
        .find(|p| p.abbr == entry.abbreviation)
        .or_else(|| {
            result
                .per_abbrev
                .iter()
                .find(|p| p.abbr.eq_ignore_ascii_case(&entry.abbreviation))
        });
    if let Some(record) = matched {
        let violated = record.verdict.as_ref().is_some_and(|v| !v.holds);
        let (proposed, status) = match record.status {
            AbbrevStatus::Reverted => (record.abbr.clone(), AbbrevStatus::Reverted),
            AbbrevStatus::Missed => (record.abbr.clone(), AbbrevStatus::Missed),
            AbbrevStatus::Expanded => (record.proposed.clone(), AbbrevStatus::Expanded),
        };
        return (proposed, status, violated);
    }

    // No per-token record (the detector did not flag this token): read the
    // final identifier directly.
    let missed = (entry.abbreviation.clone(), AbbrevStatus::Missed, false);
    let Ok(input) = split_identifier(&entry.identifier) else {
        return missed;
    };
    let Ok(output) = split_identifier(&result.final_identifier) else {
        return missed;
    };
    let input_words = input.words();
    let position = input_words.iter().position(|t| t.text == entry.abbreviation);
    let output_words = output.words();
    match position {
        Some(w) if input_words.len() == output_words.len() => {
            (output_words[w].text.clone(), AbbrevStatus::Expanded, false)
        }
        Some(_) if input_words.len() == 1 => {
            (result.final_identifier.clone(), AbbrevStatus::Expanded, false)
        }
        _ => missed,
    }
}

/// Grade results against the benchmark. Every entry id must be answered
/// exactly once; extra, duplicate, or missing ids fail the call.
pub fn score(
    entries: &[BenchmarkEntry],
    results: &[EntryResult],
    matching: &MatchConfig,
) -> Result<EvalReport, ScoreError> {
    let mut by_id: HashMap<&str, &ExpansionResult> = HashMap::new();
    let mut duplicated = Vec::new();
    for r in results {
        if by_id.insert(r.entry_id.as_str(), &r.result).is_some() {
            duplicated.push(r.entry_id.clone());
        }
    }
    let missing: Vec<String> = entries
        .iter()
        .filter(|e| !by_id.contains_key(e.id.as_str()))
        .map(|e| e.id.clone())
        .collect();
    let known: std::collections::HashSet<&str> = entries.iter().map(|e| e.id.as_str()).collect();
    let unexpected: Vec<String> = results
        .iter()
        .filter(|r| !known.contains(r.entry_id.as_str()))
        .map(|r| r.entry_id.clone())
        .collect();
    if !missing.is_empty() || !unexpected.is_empty() || !duplicated.is_empty() {
        return Err(ScoreError::IdMismatch { missing, unexpected, duplicated });
    }

    let mut counts = EvalCounts { total: entries.len() as u64, ..EvalCounts::default() };
    let mut per_entry: BTreeMap<String, PerEntryOutcome> = BTreeMap::new();
    for entry in entries {
        let result = by_id[entry.id.as_str()];
        let (proposed, status, violated) = effective_proposal(entry, result);
        if violated {
            counts.violating += 1;
        }
        let expanded = !proposed.eq_ignore_ascii_case(&entry.abbreviation);
        let correct = if expanded {
            let ok = matching.matches(&proposed, &entry.reference_expansion);
            counts.expanded += 1;
            if ok {
                counts.correct += 1;
            } else {
                counts.incorrect += 1;
            }
            Some(ok)
        } else {
            counts.missed += 1;
            None
        };
        let display_status = if expanded {
            AbbrevStatus::Expanded
        } else if status == AbbrevStatus::Reverted {
            AbbrevStatus::Reverted
        } else {
            AbbrevStatus::Missed
        };
        per_entry.insert(
            entry.id.clone(),
            PerEntryOutcome {
                entry_id: entry.id.clone(),
                proposed,
                reference: entry.reference_expansion.clone(),
                correct,
                status: display_status,
            },
        );
    }

    let (precision, recall, f1) = metrics_of(&counts);
    Ok(EvalReport {
        counts,
        precision,
        recall,
        f1,
        per_entry: per_entry.into_values().collect(),
    })
}

/// `2253` → `"2,253"`.
pub fn group_thousands(n: u64) -> String {
    let digits = n.to_string();
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

/// Paper-style delta annotation for a count column: `"420 ↓"`, `"73 ↑"`,
/// `"0 –"`.
pub fn render_count_delta(current: u64, baseline: u64) -> String {
    let (diff, arrow) = match current.cmp(&baseline) {
        std::cmp::Ordering::Greater => (current - baseline, "↑"),
        std::cmp::Ordering::Less => (baseline - current, "↓"),
        std::cmp::Ordering::Equal => (0, "–"),
    };
    format!("{} {arrow}", group_thousands(diff))
}

/// Paper-style delta annotation for a displayed percentage, in percentage
/// points: `"19 pp ↑"`, `"3 pp ↓"`, `"0 pp –"`.
pub fn render_pct_delta(current_pct: u32, baseline_pct: u32) -> String {
    let (diff, arrow) = match current_pct.cmp(&baseline_pct) {
        std::cmp::Ordering::Greater => (current_pct - baseline_pct, "↑"),
        std::cmp::Ordering::Less => (baseline_pct - current_pct, "↓"),
        std::cmp::Ordering::Equal => (0, "–"),
    };
    format!("{diff} pp {arrow}")
}

fn metric_cells(report: &EvalReport) -> [String; 3] {
    if report.counts.expanded == 0 {
        ["n/a".to_string(), "n/a".to_string(), "n/a".to_string()]
    } else {
        [
            format!("{}%", display_pct(report.precision)),
            format!("{}%", display_pct(report.recall)),
            format!("{}%", display_pct(report.f1)),
        ]
    }
}

const TABLE_COLUMNS: [&str; 10] = [
    "Run", "Total", "Expanded", "Correct", "Incorrect", "Missed", "Violating", "Precision",
    "Recall", "F1",
];

fn report_row(name: &str, report: &EvalReport) -> [String; 10] {
    let c = &report.counts;
    let [p, r, f1] = metric_cells(report);
    [
        name.to_string(),
        group_thousands(c.total),
        group_thousands(c.expanded),
        group_thousands(c.correct),
        group_thousands(c.incorrect),
        group_thousands(c.missed),
        group_thousands(c.violating),
        p,
        r,
        f1,
    ]
}

fn delta_row(current: &EvalReport, baseline: &EvalReport) -> [String; 10] {
    let c = &current.counts;
    let b = &baseline.counts;
    [
        "Δ vs baseline".to_string(),
        render_count_delta(c.total, b.total),
        render_count_delta(c.expanded, b.expanded),
        render_count_delta(c.correct, b.correct),
        render_count_delta(c.incorrect, b.incorrect),
        render_count_delta(c.missed, b.missed),
        render_count_delta(c.violating, b.violating),
        render_pct_delta(display_pct(current.precision), display_pct(baseline.precision)),
        render_pct_delta(display_pct(current.recall), display_pct(baseline.recall)),
        render_pct_delta(display_pct(current.f1), display_pct(baseline.f1)),
    ]
}

/// Render named runs (and an optional baseline for Δ annotations) as an
/// aligned text table.
pub fn render_table(runs: &[(String, &EvalReport)], baseline: Option<&EvalReport>) -> String {
    let mut rows: Vec<[String; 10]> =
        vec![TABLE_COLUMNS.map(|s| s.to_string())];
    if let Some(base) = baseline {
        rows.push(report_row("baseline", base));
    }
    for (name, report) in runs {
        rows.push(report_row(name, report));
        if let Some(base) = baseline {
            rows.push(delta_row(report, base));
        }
    }

    let mut widths = [0usize; 10];
    for row in &rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.chars().count());
        }
    }
    let mut out = String::new();
    for (index, row) in rows.iter().enumerate() {
        let mut line = String::new();
        for (i, cell) in row.iter().enumerate() {
            if i > 0 {
                line.push_str("  ");
            }
            let pad = widths[i] - cell.chars().count();
            if i == 0 {
                line.push_str(cell);
                line.push_str(&" ".repeat(pad));
            } else {
                line.push_str(&" ".repeat(pad));
                line.push_str(cell);
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
        if index == 0 {
            let total: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
            out.push_str(&"-".repeat(total));
            out.push('\n');
        }
    }
    out
}
