//! Dictionary-based abbreviation detection.
//!
//! A word token is an abbreviation candidate when it sits in the curated
//! known-abbreviation map, or when its lowercase form is missing from the
//! dictionary and it is at least `min_length` characters long. The same test
//! marks abbreviations in the input identifier and decides whether a model's
//! output still contains any.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ident::{split_identifier, IdentError, TokenSplit};

/// The dictionary shipped with the crate (one lowercase word per line).
pub const DEFAULT_WORDLIST_TEXT: &str = include_str!("../assets/wordlist.txt");

/// The curated known-abbreviation map shipped with the crate.
pub const DEFAULT_KNOWN_TEXT: &str = include_str!("../assets/known_abbreviations.tsv");

#[derive(Debug, Error)]
pub enum WordListError {
    #[error("line {line}: {word:?} is not a lowercase alphabetic word")]
    InvalidWord { line: usize, word: String },
    #[error("line {line}: expected `abbreviation<TAB>expansion`")]
    InvalidKnownEntry { line: usize },
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// An immutable dictionary plus an optional curated abbreviation map.
#[derive(Debug, Clone)]
pub struct WordList {
    entries: HashSet<String>,
    known_expansions: HashMap<String, String>,
}

impl WordList {
    /// Parse the one-word-per-line format; `#` starts a comment line.
    pub fn from_text(text: &str) -> Result<Self, WordListError> {
        let mut entries = HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !line.chars().all(|c| c.is_alphabetic() && c.is_lowercase()) {
                return Err(WordListError::InvalidWord { line: i + 1, word: line.to_string() });
            }
            entries.insert(line.to_string());
        }
        Ok(WordList { entries, known_expansions: HashMap::new() })
    }

    pub fn from_path(path: &Path) -> Result<Self, WordListError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| WordListError::Io { path: path.display().to_string(), source })?;
        Self::from_text(&text)
    }

    /// Add entries from a `abbreviation<TAB>expansion` file; `#` comments and
    /// blank lines are ignored. Later entries win on duplicate keys.
    pub fn with_known_text(mut self, text: &str) -> Result<Self, WordListError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (abbr, expansion) =
                line.split_once('\t').ok_or(WordListError::InvalidKnownEntry { line: i + 1 })?;
            let abbr = abbr.trim().to_lowercase();
            let expansion = expansion.trim().to_string();
            if abbr.is_empty() || expansion.is_empty() {
                return Err(WordListError::InvalidKnownEntry { line: i + 1 });
            }
            self.known_expansions.insert(abbr, expansion);
        }
        Ok(self)
    }

    pub fn with_known_path(self, path: &Path) -> Result<Self, WordListError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| WordListError::Io { path: path.display().to_string(), source })?;
        self.with_known_text(&text)
    }

    /// The dictionary and abbreviation map shipped with the crate.
    pub fn shipped() -> Self {
        WordList::from_text(DEFAULT_WORDLIST_TEXT)
            .expect("shipped wordlist is well-formed")
            .with_known_text(DEFAULT_KNOWN_TEXT)
            .expect("shipped abbreviation map is well-formed")
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains(&word.to_lowercase())
    }

    pub fn known_expansion(&self, token: &str) -> Option<&str> {
        self.known_expansions.get(&token.to_lowercase()).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectConfig {
    /// Minimum token length for the dictionary-absence rule. Known
    /// abbreviations are flagged regardless of length.
    pub min_length: usize,
}

impl Default for DetectConfig {
    fn default() -> Self {
        DetectConfig { min_length: 2 }
    }
}

/// Why a token was flagged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectReason {
    NotInDictionary,
    KnownAbbreviation,
}

/// One flagged token of a split identifier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbbreviationCandidate {
    /// Index into the split's token list (always a word token).
    pub token_index: usize,
    pub token_text: String,
    pub reason: DetectReason,
}

/// Flag the abbreviation candidates of a split identifier, in token order.
pub fn detect(split: &TokenSplit, words: &WordList, cfg: &DetectConfig) -> Vec<AbbreviationCandidate> {
    let mut found = Vec::new();
    for (token_index, token) in split.tokens.iter().enumerate() {
        if !token.casing.is_word() {
            continue;
        }
        let reason = if words.known_expansion(&token.text).is_some() {
            DetectReason::KnownAbbreviation
        } else if token.text.chars().count() >= cfg.min_length && !words.contains(&token.text) {
            DetectReason::NotInDictionary
        } else {
            continue;
        };
        found.push(AbbreviationCandidate {
            token_index,
            token_text: token.text.clone(),
            reason,
        });
    }
    found
}

/// Split an expanded identifier and flag whatever abbreviations remain.
///
/// This is the termination test between expansion rounds: an empty result
/// means the identifier is fully expanded.
pub fn has_remaining_abbreviations(
    expanded_identifier: &str,
    words: &WordList,
    cfg: &DetectConfig,
) -> Result<Vec<AbbreviationCandidate>, IdentError> {
    let split = split_identifier(expanded_identifier)?;
    Ok(detect(&split, words, cfg))
}
