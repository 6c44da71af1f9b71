//! Core building blocks for expanding abbreviations in source-code identifiers.
//!
//! The crate is organized around the stages of the expansion flow:
//!
//! - [`ident`] — identifier tokenization and casing-preserving reconstruction
//! - [`detect`] — dictionary-based abbreviation detection
//! - [`context`] — context blocks (surrounding code, enclosing file, knowledge graph)
//! - [`prompt`] — prompt assembly for first- and second-round requests
//! - [`postcheck`] — the subsequence post-condition and revert logic
//! - [`expansion`] — per-occurrence expansion results and token alignment
//! - [`bench`] — benchmark loading (JSONL) and the import adapter
//! - [`score`] — precision/recall/F1 accounting and report rendering
//!
//! Everything here is synchronous and pure; the LLM gateway, the pipeline
//! orchestration, and the HTTP service live in sibling crates.

pub mod bench;
pub mod context;
pub mod detect;
pub mod expansion;
pub mod ident;
pub mod postcheck;
pub mod prompt;
pub mod score;

/// Hex-encoded SHA-256 of a byte slice, used for reproducibility headers.
pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(bytes))
}
