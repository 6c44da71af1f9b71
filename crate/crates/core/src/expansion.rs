//! Expansion results and the input↔output token alignment that pairs each
//! abbreviation with its proposed full term.

use serde::{Deserialize, Serialize};

use crate::ident::{IdentKind, IdentifierOccurrence, TokenSplit};
use crate::postcheck::PostcheckVerdict;

/// A serializable pointer back to the expanded occurrence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccurrenceRef {
    pub name: String,
    pub kind: IdentKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
}

impl From<&IdentifierOccurrence> for OccurrenceRef {
    fn from(occ: &IdentifierOccurrence) -> Self {
        OccurrenceRef {
            name: occ.name.clone(),
            kind: occ.kind,
            path: occ.document.as_ref().map(|d| d.path.clone()),
            line: occ.line,
        }
    }
}

/// What happened to one abbreviation of the identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbbrevStatus {
    /// A full term differing from the abbreviation was produced and kept.
    Expanded,
    /// The proposal failed the post-condition and was replaced by the
    /// abbreviation.
    Reverted,
    /// No differing proposal was produced.
    Missed,
}

/// One abbreviation's outcome within an expanded identifier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerAbbrev {
    pub abbr: String,
    /// Token index of the abbreviation in the input identifier's split.
    pub token_index: usize,
    /// The proposed full term (for reverted entries, the rejected proposal).
    pub proposed: String,
    /// Which round produced the proposal (1 or 2).
    pub round: u8,
    /// Post-condition verdict; absent when the check did not run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<PostcheckVerdict>,
    pub status: AbbrevStatus,
    /// Word-index range of the proposal in the output identifier's split;
    /// absent when alignment fell back to the whole identifier.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_span: Option<(usize, usize)>,
}

/// The full outcome of expanding one identifier occurrence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpansionResult {
    pub occurrence: OccurrenceRef,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub round1_output: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub round2_output: Option<String>,
    pub final_identifier: String,
    pub per_abbrev: Vec<PerAbbrev>,
}

/// How the output identifier's words were paired with the input's.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alignment {
    /// Same word count: word i maps to word i.
    Positional,
    /// `prefix` leading and `suffix` trailing words match case-insensitively;
    /// the single residual input word maps to the residual output span.
    Anchored { prefix: usize, suffix: usize },
    /// No usable token mapping; pair the whole identifiers instead.
    Whole,
}

fn word_texts(split: &TokenSplit) -> Vec<&str> {
    split.words().iter().map(|t| t.text.as_str()).collect()
}

fn eq_ci(a: &str, b: &str) -> bool {
    a.to_lowercase() == b.to_lowercase()
}

/// Decide how to pair the input identifier's words with the output's.
///
/// Equal word counts pair positionally. Otherwise matching words are anchored
/// from both ends; the mapping is usable only when exactly one input word is
/// left between the anchors (the abbreviation that grew into several words).
/// Anything else falls back to whole-identifier pairing.
pub fn align(input: &TokenSplit, output: &TokenSplit) -> Alignment {
    let a = word_texts(input);
    let b = word_texts(output);
    if a.is_empty() || b.is_empty() {
        return Alignment::Whole;
    }
    if a.len() == b.len() {
        return Alignment::Positional;
    }

    let limit = a.len().min(b.len());
    let mut prefix = 0;
    while prefix < limit && eq_ci(a[prefix], b[prefix]) {
        prefix += 1;
    }
    let mut suffix = 0;
    while suffix < limit - prefix
        && eq_ci(a[a.len() - 1 - suffix], b[b.len() - 1 - suffix])
    {
        suffix += 1;
    }

    let residual_input = a.len() - prefix - suffix;
    let residual_output = b.len() - prefix - suffix;
    if residual_input == 1 && residual_output >= 1 {
        Alignment::Anchored { prefix, suffix }
    } else {
        Alignment::Whole
    }
}

/// The proposed full term for the input word at `token_index`, under an
/// alignment: the matched output text plus its word-index span, or the whole
/// output identifier with no span.
pub fn proposed_for(
    input: &TokenSplit,
    output: &TokenSplit,
    alignment: Alignment,
    token_index: usize,
) -> (String, Option<(usize, usize)>) {
    let whole = || (output.original.clone(), None);
    let word_position = input
        .word_indices()
        .iter()
        .position(|&t| t == token_index);
    let Some(w) = word_position else {
        return whole();
    };
    let out_words = word_texts(output);
    let in_count = input.words().len();

    let span = match alignment {
        Alignment::Whole => return whole(),
        Alignment::Positional => (w, w + 1),
        Alignment::Anchored { prefix, suffix } => {
            if w < prefix {
                (w, w + 1)
            } else if w >= in_count - suffix {
                let from_end = in_count - w;
                (out_words.len() - from_end, out_words.len() - from_end + 1)
            } else {
                (prefix, out_words.len() - suffix)
            }
        }
    };
    if span.0 >= span.1 || span.1 > out_words.len() {
        return whole();
    }
    (out_words[span.0..span.1].concat(), Some(span))
}

/// Splice reverted abbreviations back into the output identifier: each word
/// span is replaced (separators inside it included) by its abbreviation text.
/// Spans must be non-overlapping; `None` spans are not accepted here — a
/// whole-identifier revert is simply the original name.
pub fn splice_reverts(output: &TokenSplit, reverts: &[(usize, usize, &str)]) -> String {
    let word_token_indices = output.word_indices();
    let mut ordered: Vec<&(usize, usize, &str)> = reverts.iter().collect();
    ordered.sort_by_key(|(start, _, _)| *start);

    let mut out = String::new();
    let mut next_token = 0;
    for (word_start, word_end, abbr) in ordered {
        let first_token = word_token_indices[*word_start];
        let last_token = word_token_indices[*word_end - 1];
        for token in &output.tokens[next_token..first_token] {
            out.push_str(&token.text);
        }
        out.push_str(abbr);
        next_token = last_token + 1;
    }
    for token in &output.tokens[next_token..] {
        out.push_str(&token.text);
    }
    out
}
