//! Orchestrates identifier expansion end to end: detect abbreviations, build
//! a context-bearing prompt, ask the model, re-ask once with the still-missed
//! tokens marked, then apply the subsequence post-condition.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use abbrex_core::context::{extract_context, ContextConfig, ContextError};
use abbrex_core::detect::{detect, has_remaining_abbreviations, AbbreviationCandidate, DetectConfig, WordList};
use abbrex_core::expansion::{align, proposed_for, AbbrevStatus, ExpansionResult, OccurrenceRef, PerAbbrev};
use abbrex_core::ident::{split_identifier, IdentError, IdentifierOccurrence, TokenSplit};
use abbrex_core::postcheck::apply_postcheck;
use abbrex_core::prompt::{build_context_prompt, build_marked_prompt, PromptError, PromptSpec};
use abbrex_llm::{FixtureKey, Gateway, LlmError, LlmRequest};

mod batch;
mod eval;

pub use batch::{
    language_tag,
    resolve_entries, resolve_entries_inline, run_batch, sort_results, BatchItem, BatchOutcome,
    EntryError, ResolvedBatch,
};
pub use eval::{run_repeated_evaluation, EvalError, EvaluationOutcome, MeanMetrics, RunOutcome};

/// How many expansion rounds the pipeline may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rounds {
    One,
    #[default]
    Two,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub context: ContextConfig,
    pub detect: DetectConfig,
    pub rounds: Rounds,
    /// Apply the subsequence post-condition to kept proposals.
    pub postcheck: bool,
    /// Completions issued per prompt; the modal parsed answer wins.
    pub voting_runs: u32,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            context: ContextConfig::default(),
            detect: DetectConfig::default(),
            rounds: Rounds::default(),
            postcheck: true,
            voting_runs: 1,
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("context: {0}")]
    Context(#[from] ContextError),
    #[error("prompt: {0}")]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("identifier: {0}")]
    Ident(#[from] IdentError),
}

impl PipelineError {
    /// Budget exhaustion aborts a batch; every other error only fails the one
    /// occurrence.
    pub fn is_budget_exhausted(&self) -> bool {
        matches!(self, PipelineError::Llm(LlmError::BudgetExceeded { .. }))
    }
}

fn request(prompt: String, occ: &IdentifierOccurrence, round: u8, cfg: &PipelineConfig) -> LlmRequest {
    LlmRequest::new(prompt).with_fixture_key(FixtureKey {
        identifier: occ.name.clone(),
        round,
        context_mode: cfg.context.mode,
    })
}

/// Every detected abbreviation marked missed; used when no model reply ever
/// parsed or the occurrence failed before reaching the model.
pub(crate) fn all_missed_result(
    occ: &IdentifierOccurrence,
    candidates: &[AbbreviationCandidate],
    last_round: u8,
) -> ExpansionResult {
    ExpansionResult {
        occurrence: OccurrenceRef::from(occ),
        round1_output: None,
        round2_output: None,
        final_identifier: occ.name.clone(),
        per_abbrev: candidates
            .iter()
            .map(|c| PerAbbrev {
                abbr: c.token_text.clone(),
                token_index: c.token_index,
                proposed: c.token_text.clone(),
                round: last_round,
                verdict: None,
                status: AbbrevStatus::Missed,
                output_span: None,
            })
            .collect(),
    }
}

/// Per-token proposals an output identifier makes for the input's detected
/// abbreviations, under word alignment.
fn proposals_from(
    input: &TokenSplit,
    output: &TokenSplit,
    candidates: &[AbbreviationCandidate],
) -> HashMap<usize, (String, Option<(usize, usize)>)> {
    let alignment = align(input, output);
    candidates
        .iter()
        .map(|c| (c.token_index, proposed_for(input, output, alignment, c.token_index)))
        .collect()
}

fn build_result(
    occ: &IdentifierOccurrence,
    input: &TokenSplit,
    candidates: &[AbbreviationCandidate],
    round1: Option<String>,
    round2: Option<String>,
    candidate: String,
    candidate_round: u8,
) -> Result<ExpansionResult, PipelineError> {
    let output = split_identifier(&candidate)?;
    let finals = proposals_from(input, &output, candidates);
    // When round two produced the final answer, credit tokens that round one
    // had already expanded to the same term.
    let from_round_one: HashMap<usize, String> = match (&round1, candidate_round) {
        (Some(exp), 2) => split_identifier(exp)
            .map(|s| {
                proposals_from(input, &s, candidates)
                    .into_iter()
                    .map(|(i, (p, _))| (i, p))
                    .collect()
            })
            .unwrap_or_default(),
        _ => HashMap::new(),
    };

    let per_abbrev = candidates
        .iter()
        .map(|c| {
            let (proposed, span) = finals[&c.token_index].clone();
            let expanded = !proposed.eq_ignore_ascii_case(&c.token_text);
            let round = if expanded && candidate_round == 2 {
                match from_round_one.get(&c.token_index) {
                    Some(p) if p == &proposed && !p.eq_ignore_ascii_case(&c.token_text) => 1,
                    _ => 2,
                }
            } else {
                candidate_round
            };
            PerAbbrev {
                abbr: c.token_text.clone(),
                token_index: c.token_index,
                proposed: if expanded { proposed } else { c.token_text.clone() },
                round,
                verdict: None,
                status: if expanded { AbbrevStatus::Expanded } else { AbbrevStatus::Missed },
                output_span: if expanded { span } else { None },
            }
        })
        .collect();

    Ok(ExpansionResult {
        occurrence: OccurrenceRef::from(occ),
        round1_output: round1,
        round2_output: round2,
        final_identifier: candidate,
        per_abbrev,
    })
}

/// Expand one identifier occurrence.
///
/// Round one sends the context prompt and parses the reply. If the parsed
/// answer still contains abbreviations (and two rounds are allowed), a second
/// prompt names those tokens and carries the first answer; when round one is
/// unparseable, the second prompt instead names the input's own detected
/// abbreviations. If no reply ever parses, the identifier is returned
/// unchanged with every abbreviation missed. The post-condition runs last and
/// never issues a model call.
pub async fn expand_occurrence(
    occ: &IdentifierOccurrence,
    cfg: &PipelineConfig,
    gateway: &Gateway,
    words: &WordList,
    kg_payload: Option<&str>,
) -> Result<ExpansionResult, PipelineError> {
    let spec = PromptSpec::default();
    let input = occ.split();
    let candidates = detect(&input, words, &cfg.detect);
    let ctx = extract_context(occ, &cfg.context, kg_payload)?;

    let prompt1 = build_context_prompt(occ, &ctx, &spec);
    let reply1 = gateway.complete_with_voting(&request(prompt1, occ, 1, cfg), cfg.voting_runs).await?;
    let round1 = reply1.parsed_identifier;

    let mut round2: Option<String> = None;
    let mut last_round = 1;
    let chosen: Option<(String, u8)> = match &round1 {
        Some(exp) => {
            let remaining = has_remaining_abbreviations(exp, words, &cfg.detect)?;
            if remaining.is_empty() || cfg.rounds == Rounds::One {
                Some((exp.clone(), 1))
            } else {
                let prompt2 = build_marked_prompt(occ, &ctx, &remaining, exp, &spec)?;
                let reply2 =
                    gateway.complete_with_voting(&request(prompt2, occ, 2, cfg), cfg.voting_runs).await?;
                round2 = reply2.parsed_identifier;
                match &round2 {
                    Some(exp2) => Some((exp2.clone(), 2)),
                    None => Some((exp.clone(), 1)),
                }
            }
        }
        None if cfg.rounds == Rounds::Two && !candidates.is_empty() => {
            let prompt2 = build_marked_prompt(occ, &ctx, &candidates, &occ.name, &spec)?;
            let reply2 =
                gateway.complete_with_voting(&request(prompt2, occ, 2, cfg), cfg.voting_runs).await?;
            round2 = reply2.parsed_identifier;
            last_round = 2;
            round2.clone().map(|exp2| (exp2, 2))
        }
        None => None,
    };

    let mut result = match chosen {
        Some((candidate, round)) => {
            build_result(occ, &input, &candidates, round1, round2, candidate, round)?
        }
        None => all_missed_result(occ, &candidates, last_round),
    };
    if cfg.postcheck {
        result = apply_postcheck(result);
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use abbrex_core::context::ContextMode;
    use abbrex_core::ident::{IdentKind, SourceDocument};
    use abbrex_llm::{GatewayConfig, ScriptedBackend};

    const CLOCK_JAVA: &str = "public class Clock {\n    private long interval;\n    public void tick() {\n        long wt = waitTime;\n        sleep(wt);\n        update(wt);\n    }\n}\n";

    fn scripted_gateway(fixtures: &[(&str, u8, ContextMode, &str)]) -> (Arc<ScriptedBackend>, Gateway) {
        let replies = fixtures
            .iter()
            .map(|(identifier, round, mode, reply)| {
                (
                    FixtureKey {
                        identifier: identifier.to_string(),
                        round: *round,
                        context_mode: *mode,
                    },
                    reply.to_string(),
                )
            })
            .collect();
        let backend = Arc::new(ScriptedBackend::new(replies));
        let gateway = Gateway::new(backend.clone(), GatewayConfig::default()).unwrap();
        (backend, gateway)
    }

    fn in_clock(name: &str, line: usize) -> IdentifierOccurrence {
        let doc = Arc::new(SourceDocument::from_text("Clock.java", CLOCK_JAVA, "java"));
        IdentifierOccurrence::in_document(name, IdentKind::VariableName, doc, line).unwrap()
    }

    fn bare(name: &str) -> IdentifierOccurrence {
        IdentifierOccurrence::bare(name, IdentKind::VariableName).unwrap()
    }

    fn none_mode() -> PipelineConfig {
        PipelineConfig {
            context: ContextConfig { mode: ContextMode::None, ..ContextConfig::default() },
            ..PipelineConfig::default()
        }
    }

    #[tokio::test]
    async fn clean_first_round_terminates_after_one_call() {
        let (backend, gateway) = scripted_gateway(&[(
            "wt",
            1,
            ContextMode::SurroundingCode,
            "Output: \"waitTime\"",
        )]);
        let occ = in_clock("wt", 4);
        let words = WordList::shipped();
        let result =
            expand_occurrence(&occ, &PipelineConfig::default(), &gateway, &words, None).await.unwrap();
        assert_eq!(result.final_identifier, "waitTime");
        assert_eq!(result.round1_output.as_deref(), Some("waitTime"));
        assert_eq!(result.round2_output, None);
        assert_eq!(result.per_abbrev.len(), 1);
        assert_eq!(result.per_abbrev[0].status, AbbrevStatus::Expanded);
        assert_eq!(result.per_abbrev[0].proposed, "waitTime");
        assert_eq!(result.per_abbrev[0].round, 1);
        assert!(result.per_abbrev[0].verdict.as_ref().unwrap().holds);
        assert_eq!(backend.calls(), 1);
    }

    #[tokio::test]
    async fn echoed_token_is_marked_and_rescued_in_round_two() {
        let name = "testWithMultiDimensionalArray";
        let (backend, gateway) = scripted_gateway(&[
            (name, 1, ContextMode::None, name),
            (name, 2, ContextMode::None, "testWithMultipleDimensionalArray"),
        ]);
        let words = WordList::shipped();
        let result =
            expand_occurrence(&bare(name), &none_mode(), &gateway, &words, None).await.unwrap();
        assert_eq!(result.final_identifier, "testWithMultipleDimensionalArray");
        assert_eq!(result.round1_output.as_deref(), Some(name));
        assert_eq!(result.round2_output.as_deref(), Some("testWithMultipleDimensionalArray"));
        let multi = &result.per_abbrev[0];
        assert_eq!(multi.abbr, "Multi");
        assert_eq!(multi.proposed, "Multiple");
        assert_eq!(multi.status, AbbrevStatus::Expanded);
        assert_eq!(multi.round, 2);
        assert_eq!(backend.calls(), 2);
    }

    #[tokio::test]
    async fn violating_proposal_is_reverted_without_extra_calls() {
        let (backend, gateway) =
            scripted_gateway(&[("dtde", 1, ContextMode::None, "Output: \"dragDropEnd\"")]);
        let words = WordList::shipped();
        let result =
            expand_occurrence(&bare("dtde"), &none_mode(), &gateway, &words, None).await.unwrap();
        assert_eq!(result.final_identifier, "dtde");
        let entry = &result.per_abbrev[0];
        assert_eq!(entry.status, AbbrevStatus::Reverted);
        assert_eq!(entry.proposed, "dragDropEnd");
        assert!(!entry.verdict.as_ref().unwrap().holds);
        assert_eq!(backend.calls(), 1);
    }

    #[tokio::test]
    async fn unparseable_both_rounds_leaves_everything_missed() {
        let (backend, gateway) = scripted_gateway(&[
            ("fe", 1, ContextMode::None, "I cannot tell without more code."),
            ("fe", 2, ContextMode::None, "Sorry, still not sure what it means."),
        ]);
        let words = WordList::shipped();
        let result =
            expand_occurrence(&bare("fe"), &none_mode(), &gateway, &words, None).await.unwrap();
        assert_eq!(result.final_identifier, "fe");
        assert_eq!(result.round1_output, None);
        assert_eq!(result.round2_output, None);
        assert_eq!(result.per_abbrev.len(), 1);
        assert_eq!(result.per_abbrev[0].status, AbbrevStatus::Missed);
        assert_eq!(result.per_abbrev[0].round, 2);
        assert_eq!(backend.calls(), 2);
    }

    #[tokio::test]
    async fn unparseable_round_one_is_rescued_by_a_marked_round_two() {
        let (backend, gateway) = scripted_gateway(&[
            ("vb", 1, ContextMode::None, "It likely refers to a view box."),
            ("vb", 2, ContextMode::None, "Output: \"viewBox\""),
        ]);
        let words = WordList::shipped();
        let result =
            expand_occurrence(&bare("vb"), &none_mode(), &gateway, &words, None).await.unwrap();
        assert_eq!(result.final_identifier, "viewBox");
        assert_eq!(result.round1_output, None);
        assert_eq!(result.round2_output.as_deref(), Some("viewBox"));
        assert_eq!(result.per_abbrev[0].status, AbbrevStatus::Expanded);
        assert_eq!(result.per_abbrev[0].round, 2);
        assert_eq!(backend.calls(), 2);
    }

    #[tokio::test]
    async fn single_round_mode_issues_exactly_one_call() {
        let name = "testWithMultiDimensionalArray";
        let (backend, gateway) = scripted_gateway(&[(name, 1, ContextMode::None, name)]);
        let cfg = PipelineConfig { rounds: Rounds::One, postcheck: false, ..none_mode() };
        let words = WordList::shipped();
        let result = expand_occurrence(&bare(name), &cfg, &gateway, &words, None).await.unwrap();
        assert_eq!(result.final_identifier, name);
        assert_eq!(result.per_abbrev[0].status, AbbrevStatus::Missed);
        assert_eq!(result.per_abbrev[0].verdict, None);
        assert_eq!(backend.calls(), 1);
    }

    #[tokio::test]
    async fn fully_expanded_input_passes_through() {
        let (backend, gateway) =
            scripted_gateway(&[("waitTime", 1, ContextMode::None, "waitTime")]);
        let words = WordList::shipped();
        let result =
            expand_occurrence(&bare("waitTime"), &none_mode(), &gateway, &words, None).await.unwrap();
        assert_eq!(result.final_identifier, "waitTime");
        assert!(result.per_abbrev.is_empty());
        assert_eq!(backend.calls(), 1);
    }

    #[tokio::test]
    async fn unparseable_round_two_falls_back_to_the_round_one_answer() {
        let name = "resCtxValue";
        let (backend, gateway) = scripted_gateway(&[
            (name, 1, ContextMode::None, "resourceCtxValue"),
            (name, 2, ContextMode::None, "it is probably resource context value"),
        ]);
        let words = WordList::shipped();
        let result =
            expand_occurrence(&bare(name), &none_mode(), &gateway, &words, None).await.unwrap();
        assert_eq!(result.final_identifier, "resourceCtxValue");
        let res = result.per_abbrev.iter().find(|p| p.abbr == "res").unwrap();
        assert_eq!(res.status, AbbrevStatus::Expanded);
        assert_eq!(res.round, 1);
        let ctx = result.per_abbrev.iter().find(|p| p.abbr == "Ctx").unwrap();
        assert_eq!(ctx.status, AbbrevStatus::Missed);
        assert_eq!(backend.calls(), 2);
    }

    #[tokio::test]
    async fn round_one_expansions_keep_their_round_through_round_two() {
        let name = "resCtx";
        let (backend, gateway) = scripted_gateway(&[
            (name, 1, ContextMode::None, "resourceCtx"),
            (name, 2, ContextMode::None, "resourceContext"),
        ]);
        let words = WordList::shipped();
        let result =
            expand_occurrence(&bare(name), &none_mode(), &gateway, &words, None).await.unwrap();
        assert_eq!(result.final_identifier, "resourceContext");
        let res = result.per_abbrev.iter().find(|p| p.abbr == "res").unwrap();
        assert_eq!((res.status, res.round), (AbbrevStatus::Expanded, 1));
        let ctx = result.per_abbrev.iter().find(|p| p.abbr == "Ctx").unwrap();
        assert_eq!((ctx.status, ctx.round), (AbbrevStatus::Expanded, 2));
        assert_eq!(ctx.proposed, "Context");
        assert_eq!(backend.calls(), 2);
    }

    #[tokio::test]
    async fn missing_context_prerequisites_fail_the_occurrence() {
        let (_backend, gateway) = scripted_gateway(&[]);
        let words = WordList::shipped();
        let err = expand_occurrence(&bare("wt"), &PipelineConfig::default(), &gateway, &words, None)
            .await
            .unwrap_err();
        assert!(matches!(err, PipelineError::Context(ContextError::MissingDocument)));

        let kg = PipelineConfig {
            context: ContextConfig { mode: ContextMode::KnowledgeGraph, ..ContextConfig::default() },
            ..PipelineConfig::default()
        };
        let err = expand_occurrence(&bare("wt"), &kg, &gateway, &words, None).await.unwrap_err();
        assert!(matches!(err, PipelineError::Context(ContextError::MissingKnowledgeGraph)));
    }
}
