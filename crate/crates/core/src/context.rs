//! Context blocks attached to prompts: nothing, a surrounding-code window,
//! the whole enclosing file, or a pre-supplied knowledge-graph payload.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ident::IdentifierOccurrence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ContextMode {
    None,
    EnclosingFile,
    #[default]
    SurroundingCode,
    KnowledgeGraph,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextConfig {
    pub mode: ContextMode,
    /// Lines taken before and after the occurrence line (window of
    /// 2·radius+1 lines, clipped at the file edges).
    pub window_radius: usize,
    /// Upper bound on the rendered context text, in characters.
    pub max_context_chars: usize,
}

impl Default for ContextConfig {
    fn default() -> Self {
        ContextConfig {
            mode: ContextMode::SurroundingCode,
            window_radius: 3,
            max_context_chars: 60_000,
        }
    }
}

/// Marker appended to the occurrence's line in enclosing-file context, so the
/// model can find the target in a large file. Added to the prompt copy only.
pub const TARGET_MARKER: &str = " // <<target>>";

/// Marker appended when context text is cut at `max_context_chars`.
pub const TRUNCATION_MARKER: &str = "…[truncated]";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextBlock {
    pub mode: ContextMode,
    pub text: String,
    /// 1-based inclusive line range covered by the text, when line-based.
    pub line_span: Option<(usize, usize)>,
}

impl ContextBlock {
    pub fn empty() -> Self {
        ContextBlock { mode: ContextMode::None, text: String::new(), line_span: None }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ContextError {
    #[error("context mode needs the occurrence's source document")]
    MissingDocument,
    #[error("context mode needs the occurrence's line number")]
    MissingLine,
    #[error("knowledge-graph context needs a payload for the entry")]
    MissingKnowledgeGraph,
    #[error("occurrence line {line} is out of range for a document of {line_count} lines")]
    LineOutOfRange { line: usize, line_count: usize },
}

/// Build the context block for one occurrence under the configured mode.
pub fn extract_context(
    occ: &IdentifierOccurrence,
    cfg: &ContextConfig,
    kg_payload: Option<&str>,
) -> Result<ContextBlock, ContextError> {
    let block = match cfg.mode {
        ContextMode::None => ContextBlock::empty(),
        ContextMode::KnowledgeGraph => {
            let payload = kg_payload.ok_or(ContextError::MissingKnowledgeGraph)?;
            ContextBlock {
                mode: ContextMode::KnowledgeGraph,
                text: payload.to_string(),
                line_span: None,
            }
        }
        ContextMode::EnclosingFile | ContextMode::SurroundingCode => {
            let document = occ.document.as_deref().ok_or(ContextError::MissingDocument)?;
            let line = occ.line.ok_or(ContextError::MissingLine)?;
            let line_count = document.line_count();
            if line == 0 || line > line_count {
                return Err(ContextError::LineOutOfRange { line, line_count });
            }
            let (first, last) = match cfg.mode {
                ContextMode::EnclosingFile => (1, line_count),
                _ => (line.saturating_sub(cfg.window_radius).max(1), (line + cfg.window_radius).min(line_count)),
            };
            let mut rendered = Vec::with_capacity(last - first + 1);
            for number in first..=last {
                let text = document.line(number).expect("line range is validated");
                if cfg.mode == ContextMode::EnclosingFile && number == line {
                    rendered.push(format!("{text}{TARGET_MARKER}"));
                } else {
                    rendered.push(text.to_string());
                }
            }
            ContextBlock { mode: cfg.mode, text: rendered.join("\n"), line_span: Some((first, last)) }
        }
    };
    Ok(truncate_block(block, cfg.max_context_chars))
}

fn truncate_block(mut block: ContextBlock, max_chars: usize) -> ContextBlock {
    let len = block.text.chars().count();
    if len <= max_chars {
        return block;
    }
    let marker_len = TRUNCATION_MARKER.chars().count();
    let keep = max_chars.saturating_sub(marker_len);
    let mut text: String = block.text.chars().take(keep).collect();
    text.push_str(TRUNCATION_MARKER);
    if text.chars().count() > max_chars {
        // max_chars smaller than the marker itself: hard cut.
        text = text.chars().take(max_chars).collect();
    }
    block.text = text;
    block
}
