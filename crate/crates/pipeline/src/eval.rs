//! Scored evaluation runs over a benchmark, with optional repetition and
//! averaged metrics.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use abbrex_core::bench::BenchmarkEntry;
use abbrex_core::detect::WordList;
use abbrex_core::score::{score, EvalReport, MatchConfig, ScoreError};
use abbrex_llm::Gateway;

use crate::batch::{run_batch, EntryError, ResolvedBatch};
use crate::PipelineConfig;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("repeats must be at least 1")]
    ZeroRepeats,
    #[error(transparent)]
    Score(#[from] ScoreError),
}

/// One scored pipeline pass over the benchmark.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunOutcome {
    pub report: EvalReport,
    pub entry_errors: Vec<EntryError>,
    /// Entries covered by this run's report (fewer than the benchmark when
    /// the budget tripped).
    pub graded: usize,
    pub budget_exhausted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluationOutcome {
    pub runs: Vec<RunOutcome>,
    /// Arithmetic means of the per-run metrics.
    pub mean: MeanMetrics,
    /// Source files that could not be resolved (shared by all runs).
    pub resolve_warnings: Vec<String>,
    pub budget_exhausted: bool,
}

/// Run the full pipeline `repeats` times over the resolved benchmark and
/// score each pass. Budget exhaustion ends the repetition early; the partial
/// run is scored over the entries it finished.
pub async fn run_repeated_evaluation(
    entries: &[BenchmarkEntry],
    resolved: &ResolvedBatch,
    cfg: &PipelineConfig,
    gateway: &Gateway,
    words: &WordList,
    matching: &MatchConfig,
    repeats: u32,
) -> Result<EvaluationOutcome, EvalError> {
    if repeats == 0 {
        return Err(EvalError::ZeroRepeats);
    }

    let mut runs = Vec::with_capacity(repeats as usize);
    let mut budget_exhausted = false;
    for _ in 0..repeats {
        let outcome = run_batch(&resolved.items, cfg, gateway, words).await;
        let covered: HashSet<&str> = outcome.results.iter().map(|r| r.entry_id.as_str()).collect();
        let graded_entries: Vec<BenchmarkEntry> =
            entries.iter().filter(|e| covered.contains(e.id.as_str())).cloned().collect();
        let report = score(&graded_entries, &outcome.results, matching)?;
        runs.push(RunOutcome {
            report,
            entry_errors: outcome.errors,
            graded: graded_entries.len(),
            budget_exhausted: outcome.budget_exhausted,
        });
        if outcome.budget_exhausted {
            budget_exhausted = true;
            break;
        }
    }

    let n = runs.len() as f64;
    let mean = MeanMetrics {
        precision: runs.iter().map(|r| r.report.precision).sum::<f64>() / n,
        recall: runs.iter().map(|r| r.report.recall).sum::<f64>() / n,
        f1: runs.iter().map(|r| r.report.f1).sum::<f64>() / n,
    };
    Ok(EvaluationOutcome {
        runs,
        mean,
        resolve_warnings: resolved.warnings.clone(),
        budget_exhausted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use abbrex_core::context::{ContextConfig, ContextMode};
    use abbrex_llm::{FixtureKey, GatewayConfig, ScriptedBackend};

    fn entry(id: &str, identifier: &str, abbr: &str, reference: &str) -> BenchmarkEntry {
        BenchmarkEntry {
            id: id.to_string(),
            project: "demo".to_string(),
            file_path: "none.java".to_string(),
            line: 1,
            identifier: identifier.to_string(),
            kind: abbrex_core::ident::IdentKind::VariableName,
            abbreviation: abbr.to_string(),
            reference_expansion: reference.to_string(),
            kg_payload: None,
        }
    }

    fn gateway_for(fixtures: &[(&str, &str)], budget: u64) -> Gateway {
        let replies = fixtures
            .iter()
            .map(|(identifier, reply)| {
                (
                    FixtureKey {
                        identifier: identifier.to_string(),
                        round: 1,
                        context_mode: ContextMode::None,
                    },
                    reply.to_string(),
                )
            })
            .collect();
        let backend = Arc::new(ScriptedBackend::new(replies));
        let config = GatewayConfig { request_budget: budget, parallelism: 1, ..GatewayConfig::default() };
        Gateway::new(backend, config).unwrap()
    }

    fn no_context() -> PipelineConfig {
        PipelineConfig {
            context: ContextConfig { mode: ContextMode::None, ..ContextConfig::default() },
            ..PipelineConfig::default()
        }
    }

    #[tokio::test]
    async fn repeats_average_the_per_run_metrics() {
        let entries =
            vec![entry("e1", "wt", "wt", "waitTime"), entry("e2", "vb", "vb", "viewBox")];
        // "valueBox" satisfies the subsequence check yet mismatches the
        // reference, so it grades as incorrect rather than reverted.
        let gateway = gateway_for(&[("wt", "waitTime"), ("vb", "valueBox")], 1_000);
        let words = WordList::shipped();
        let resolved = crate::resolve_entries(&entries, std::path::Path::new("/nonexistent"));
        let outcome = run_repeated_evaluation(
            &entries,
            &resolved,
            &no_context(),
            &gateway,
            &words,
            &MatchConfig::default(),
            2,
        )
        .await
        .unwrap();

        assert_eq!(outcome.runs.len(), 2);
        for run in &outcome.runs {
            assert_eq!(run.report.counts.total, 2);
            assert_eq!(run.report.counts.expanded, 2);
            assert_eq!(run.report.counts.correct, 1);
            assert_eq!(run.graded, 2);
        }
        assert!((outcome.mean.precision - 0.5).abs() < 1e-12);
        assert!((outcome.mean.recall - 0.5).abs() < 1e-12);
        assert!(!outcome.budget_exhausted);
        // resolution warnings surface the missing source tree once
        assert_eq!(outcome.resolve_warnings.len(), 1);
    }

    #[tokio::test]
    async fn budget_exhaustion_scores_the_partial_run_and_stops_repeating() {
        let entries =
            vec![entry("e1", "wt", "wt", "waitTime"), entry("e2", "vb", "vb", "viewBox")];
        let gateway = gateway_for(&[("wt", "waitTime"), ("vb", "viewBox")], 1);
        let words = WordList::shipped();
        let resolved = crate::resolve_entries(&entries, std::path::Path::new("/nonexistent"));
        let outcome = run_repeated_evaluation(
            &entries,
            &resolved,
            &no_context(),
            &gateway,
            &words,
            &MatchConfig::default(),
            5,
        )
        .await
        .unwrap();

        assert!(outcome.budget_exhausted);
        assert_eq!(outcome.runs.len(), 1);
        assert_eq!(outcome.runs[0].graded, 1);
        assert_eq!(outcome.runs[0].report.counts.total, 1);
        assert_eq!(outcome.runs[0].report.counts.correct, 1);
    }

    #[tokio::test]
    async fn zero_repeats_is_rejected() {
        let gateway = gateway_for(&[], 10);
        let words = WordList::shipped();
        let resolved = ResolvedBatch { items: Vec::new(), warnings: Vec::new() };
        let err = run_repeated_evaluation(
            &[],
            &resolved,
            &no_context(),
            &gateway,
            &words,
            &MatchConfig::default(),
            0,
        )
        .await
        .unwrap_err();
        assert!(matches!(err, EvalError::ZeroRepeats));
    }
}
