//! The commonsense post-condition: an abbreviation must be a character
//! subsequence of its proposed full term. Proposals that violate it are
//! reverted to the abbreviation, with no further model calls.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expansion::{splice_reverts, AbbrevStatus, ExpansionResult};
use crate::ident::split_identifier;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PostcheckError {
    #[error("abbreviation is empty")]
    EmptyAbbreviation,
}

/// The recorded outcome of checking one (abbreviation, proposal) pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostcheckVerdict {
    pub abbreviation: String,
    pub proposed: String,
    pub holds: bool,
}

/// True iff the characters of `abbr` appear in `full` in order (not
/// necessarily contiguously), compared case-insensitively.
pub fn is_subsequence(abbr: &str, full: &str) -> Result<bool, PostcheckError> {
    if abbr.is_empty() {
        return Err(PostcheckError::EmptyAbbreviation);
    }
    let abbr_lower = abbr.to_lowercase();
    let mut needed = abbr_lower.chars().peekable();
    for ch in full.to_lowercase().chars() {
        if needed.peek() == Some(&ch) {
            needed.next();
        }
    }
    Ok(needed.peek().is_none())
}

/// Check every kept proposal of a result and revert the violators.
///
/// Entries whose proposal spans output tokens are reverted by splicing the
/// abbreviation back into the identifier; a violating whole-identifier pair
/// (alignment fallback) reverts the identifier to the original name.
/// Already-reverted and missed entries are left alone, which makes the
/// operation idempotent.
pub fn apply_postcheck(mut result: ExpansionResult) -> ExpansionResult {
    let Ok(output_split) = split_identifier(&result.final_identifier) else {
        return result;
    };

    let mut span_reverts: Vec<(usize, usize, String)> = Vec::new();
    let mut whole_revert = false;
    for entry in &mut result.per_abbrev {
        if entry.status != AbbrevStatus::Expanded {
            continue;
        }
        let holds = is_subsequence(&entry.abbr, &entry.proposed)
            .expect("abbreviation tokens are non-empty");
        entry.verdict = Some(PostcheckVerdict {
            abbreviation: entry.abbr.clone(),
            proposed: entry.proposed.clone(),
            holds,
        });
        if holds {
            continue;
        }
        entry.status = AbbrevStatus::Reverted;
        match entry.output_span {
            Some((start, end)) => span_reverts.push((start, end, entry.abbr.clone())),
            None => whole_revert = true,
        }
    }

    if whole_revert {
        result.final_identifier = result.occurrence.name.clone();
    } else if !span_reverts.is_empty() {
        let reverts: Vec<(usize, usize, &str)> =
            span_reverts.iter().map(|(s, e, a)| (*s, *e, a.as_str())).collect();
        result.final_identifier = splice_reverts(&output_split, &reverts);
    }
    result
}
