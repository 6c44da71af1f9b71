//! Identifier tokenization and casing-preserving reconstruction.
//!
//! An identifier is split into word, digit, and separator tokens. Word tokens
//! carry the casing they had in the original identifier so that replacements
//! (e.g. an abbreviation swapped for its expansion) can be written back
//! without disturbing the identifier's style.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A source file held as 1-indexed lines (no trailing newlines).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceDocument {
    pub path: String,
    pub lines: Vec<String>,
    /// Informational language tag, e.g. "java".
    pub language_tag: String,
}

impl SourceDocument {
    pub fn from_text(path: impl Into<String>, text: &str, language_tag: impl Into<String>) -> Self {
        let lines = text.split('\n').map(|l| l.trim_end_matches('\r').to_string()).collect();
        SourceDocument { path: path.into(), lines, language_tag: language_tag.into() }
    }

    pub fn line_count(&self) -> usize {
        self.lines.len()
    }

    /// Fetch a line by 1-based number.
    pub fn line(&self, number: usize) -> Option<&str> {
        number.checked_sub(1).and_then(|i| self.lines.get(i)).map(String::as_str)
    }
}

/// Syntactic kind of the identifier, as named in prompts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum IdentKind {
    #[default]
    VariableName,
    MethodName,
    ClassName,
    ParameterName,
    FieldName,
    Other,
}

impl std::fmt::Display for IdentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            IdentKind::VariableName => "VariableName",
            IdentKind::MethodName => "MethodName",
            IdentKind::ClassName => "ClassName",
            IdentKind::ParameterName => "ParameterName",
            IdentKind::FieldName => "FieldName",
            IdentKind::Other => "Other",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for IdentKind {
    type Err = IdentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "VariableName" => Ok(IdentKind::VariableName),
            "MethodName" => Ok(IdentKind::MethodName),
            "ClassName" => Ok(IdentKind::ClassName),
            "ParameterName" => Ok(IdentKind::ParameterName),
            "FieldName" => Ok(IdentKind::FieldName),
            "Other" => Ok(IdentKind::Other),
            other => Err(IdentError::UnknownKind { kind: other.to_string() }),
        }
    }
}

/// One identifier to expand, optionally located in a source document.
#[derive(Debug, Clone)]
pub struct IdentifierOccurrence {
    pub name: String,
    pub kind: IdentKind,
    pub document: Option<Arc<SourceDocument>>,
    /// 1-based line of the occurrence; requires `document`.
    pub line: Option<usize>,
}

impl IdentifierOccurrence {
    /// A free-standing occurrence with no source location.
    pub fn bare(name: impl Into<String>, kind: IdentKind) -> Result<Self, IdentError> {
        let name = name.into();
        validate_identifier_name(&name)?;
        Ok(IdentifierOccurrence { name, kind, document: None, line: None })
    }

    /// An occurrence pinned to a line of a document.
    pub fn in_document(
        name: impl Into<String>,
        kind: IdentKind,
        document: Arc<SourceDocument>,
        line: usize,
    ) -> Result<Self, IdentError> {
        let name = name.into();
        validate_identifier_name(&name)?;
        if line == 0 || line > document.line_count() {
            return Err(IdentError::LineOutOfRange { line, line_count: document.line_count() });
        }
        Ok(IdentifierOccurrence { name, kind, document: Some(document), line: Some(line) })
    }

    pub fn split(&self) -> TokenSplit {
        split_identifier(&self.name).expect("occurrence names are validated on construction")
    }
}

/// How a single token was cased in the original identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Casing {
    /// All letters lowercase: `text`.
    Lower,
    /// First letter uppercase, the rest lowercase: `Evt`.
    Capitalized,
    /// All letters uppercase: `URL`.
    Upper,
    /// Anything else: `iOS`.
    Mixed,
    /// A run of digits: `42`.
    Digits,
    /// A run of separator characters: `_`, `$`, `__`.
    Symbol,
}

impl Casing {
    /// Word tokens are the ones abbreviation detection and expansion act on.
    pub fn is_word(self) -> bool {
        matches!(self, Casing::Lower | Casing::Capitalized | Casing::Upper | Casing::Mixed)
    }
}

/// One token of a split identifier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    /// 0-based char offset of the token within the original identifier.
    pub start: usize,
    pub casing: Casing,
}

/// The full token sequence of one identifier, in source order.
///
/// Concatenating the token texts always reproduces `original`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSplit {
    pub original: String,
    pub tokens: Vec<Token>,
}

impl TokenSplit {
    /// Indices of word tokens (the targets of expansion), in order.
    pub fn word_indices(&self) -> Vec<usize> {
        self.tokens
            .iter()
            .enumerate()
            .filter(|(_, t)| t.casing.is_word())
            .map(|(i, _)| i)
            .collect()
    }

    /// Word tokens only, in order.
    pub fn words(&self) -> Vec<&Token> {
        self.tokens.iter().filter(|t| t.casing.is_word()).collect()
    }

    /// Concatenate the raw token texts back into the identifier.
    pub fn rejoin(&self) -> String {
        self.tokens.iter().map(|t| t.text.as_str()).collect()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IdentError {
    #[error("identifier is empty")]
    Empty,
    #[error("identifier contains invalid character {ch:?} at char offset {index}")]
    InvalidChar { ch: char, index: usize },
    #[error("identifier starts with a digit")]
    LeadingDigit,
    #[error("unknown identifier kind {kind:?}")]
    UnknownKind { kind: String },
    #[error("line {line} is out of range for a document of {line_count} lines")]
    LineOutOfRange { line: usize, line_count: usize },
    #[error("replacement index {index} is out of range ({tokens} tokens)")]
    IndexOutOfRange { index: usize, tokens: usize },
    #[error("token {index} is a separator and cannot be replaced")]
    SymbolReplacement { index: usize },
    #[error("replacement for token {index} is empty")]
    ReplacementEmpty { index: usize },
}

/// Check the strict identifier lexical class: letters, digits, `_`, `$`,
/// not starting with a digit.
pub fn validate_identifier_name(name: &str) -> Result<(), IdentError> {
    let first = name.chars().next().ok_or(IdentError::Empty)?;
    if first.is_numeric() {
        return Err(IdentError::LeadingDigit);
    }
    for (index, ch) in name.chars().enumerate() {
        if !(ch.is_alphanumeric() || ch == '_' || ch == '$') {
            return Err(IdentError::InvalidChar { ch, index });
        }
    }
    Ok(())
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum CharClass {
    Alpha,
    Digit,
    Sep,
}

fn classify(ch: char) -> CharClass {
    if ch.is_alphabetic() {
        CharClass::Alpha
    } else if ch.is_numeric() {
        CharClass::Digit
    } else {
        CharClass::Sep
    }
}

fn casing_of(word: &str) -> Casing {
    let mut chars = word.chars();
    let first = chars.next().expect("word tokens are non-empty");
    if word.chars().all(|c| c.is_lowercase()) {
        Casing::Lower
    } else if word.chars().all(|c| c.is_uppercase()) {
        Casing::Upper
    } else if first.is_uppercase() && chars.all(|c| c.is_lowercase()) {
        Casing::Capitalized
    } else {
        Casing::Mixed
    }
}

/// Split an identifier into word, digit, and separator tokens.
///
/// Boundaries are placed:
/// - around runs of separator characters (each run is one `Symbol` token),
/// - between letters and digits in either direction,
/// - at a lowercase→uppercase transition (`textEvt` → `text`, `Evt`),
/// - before the last uppercase letter of an uppercase run that is followed by
///   a lowercase letter (`URLPath` → `URL`, `Path`).
///
/// Whitespace and control characters are rejected; everything else that is
/// neither a letter nor a digit is treated as a separator. (Use
/// [`validate_identifier_name`] for the strict letters/digits/`_`/`$` class.)
pub fn split_identifier(name: &str) -> Result<TokenSplit, IdentError> {
    if name.is_empty() {
        return Err(IdentError::Empty);
    }
    for (index, ch) in name.chars().enumerate() {
        if ch.is_whitespace() || ch.is_control() {
            return Err(IdentError::InvalidChar { ch, index });
        }
    }

    let chars: Vec<char> = name.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let class = classify(chars[i]);
        let mut j = i + 1;
        while j < chars.len() && classify(chars[j]) == class {
            j += 1;
        }
        match class {
            CharClass::Sep => {
                let text: String = chars[i..j].iter().collect();
                tokens.push(Token { text, start: i, casing: Casing::Symbol });
            }
            CharClass::Digit => {
                let text: String = chars[i..j].iter().collect();
                tokens.push(Token { text, start: i, casing: Casing::Digits });
            }
            CharClass::Alpha => split_alpha_run(&chars[i..j], i, &mut tokens),
        }
        i = j;
    }
    Ok(TokenSplit { original: name.to_string(), tokens })
}

/// Split one all-letter run on case boundaries and push the word tokens.
fn split_alpha_run(run: &[char], run_start: usize, tokens: &mut Vec<Token>) {
    let mut begin = 0;
    let push = |begin: usize, end: usize, tokens: &mut Vec<Token>| {
        let text: String = run[begin..end].iter().collect();
        let casing = casing_of(&text);
        tokens.push(Token { text, start: run_start + begin, casing });
    };
    for i in 1..run.len() {
        let prev = run[i - 1];
        let cur = run[i];
        let boundary = (prev.is_lowercase() && cur.is_uppercase())
            || (prev.is_uppercase()
                && cur.is_uppercase()
                && run.get(i + 1).is_some_and(|n| n.is_lowercase()));
        if boundary {
            push(begin, i, tokens);
            begin = i;
        }
    }
    push(begin, run.len(), tokens);
}

/// Split a replacement phrase into its words: whitespace first, then the
/// identifier boundary rules on each piece ("uniform resource locator" and
/// "UniformResourceLocator" both give three words).
fn replacement_words(text: &str) -> Vec<String> {
    let mut words = Vec::new();
    for piece in text.split_whitespace() {
        if let Ok(split) = split_identifier(piece) {
            words.extend(split.tokens.into_iter().filter(|t| t.casing.is_word()).map(|t| t.text));
        }
    }
    words
}

/// Rebuild an identifier after swapping selected tokens for replacement text.
///
/// Keys are token indices into `split.tokens`; separator tokens cannot be
/// replaced, and untouched tokens pass through verbatim. A replaced word
/// token is re-cased to its original casing class:
///
/// - `Lower` → the replacement words joined all-lowercase,
/// - `Capitalized`/`Mixed` → each word's first letter upcased, the rest kept,
/// - `Upper` → Capitalized-per-word (`URL` + "uniform resource locator" →
///   `UniformResourceLocator`),
/// - `Digits` → replacement inserted as given.
///
/// With empty `replacements`, returns the original identifier unchanged.
pub fn reconstruct(
    split: &TokenSplit,
    replacements: &BTreeMap<usize, String>,
) -> Result<String, IdentError> {
    for (&index, text) in replacements {
        let token = split
            .tokens
            .get(index)
            .ok_or(IdentError::IndexOutOfRange { index, tokens: split.tokens.len() })?;
        if token.casing == Casing::Symbol {
            return Err(IdentError::SymbolReplacement { index });
        }
        if text.trim().is_empty() {
            return Err(IdentError::ReplacementEmpty { index });
        }
    }

    let mut out = String::new();
    for (index, token) in split.tokens.iter().enumerate() {
        let Some(replacement) = replacements.get(&index) else {
            out.push_str(&token.text);
            continue;
        };
        if token.casing == Casing::Digits {
            out.push_str(replacement);
            continue;
        }
        let words = replacement_words(replacement);
        if words.is_empty() {
            return Err(IdentError::ReplacementEmpty { index });
        }
        match token.casing {
            Casing::Lower => {
                for word in &words {
                    out.push_str(&word.to_lowercase());
                }
            }
            _ => {
                for word in &words {
                    out.push_str(&upper_first(word));
                }
            }
        }
    }
    Ok(out)
}

fn upper_first(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Identifier-shaped lexemes in a line of source text, with char offsets.
///
/// A lexeme starts with a letter, `_`, or `$` and continues through letters,
/// digits, `_`, and `$`. Used to locate an expansion target on its line.
pub fn identifiers_in_line(line: &str) -> Vec<(usize, String)> {
    let mut found = Vec::new();
    let mut current: Option<(usize, String)> = None;
    for (index, ch) in line.chars().enumerate() {
        let starts = ch.is_alphabetic() || ch == '_' || ch == '$';
        let continues = starts || ch.is_numeric();
        match current.as_mut() {
            Some((_, text)) if continues => text.push(ch),
            Some(_) => found.push(current.take().unwrap()),
            None => {}
        }
        if current.is_none() && starts {
            current = Some((index, ch.to_string()));
        }
    }
    if let Some(last) = current {
        found.push(last);
    }
    found
}
