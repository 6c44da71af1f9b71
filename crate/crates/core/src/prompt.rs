//! Prompt assembly for both expansion rounds.
//!
//! Prompts are rendered from a template with the placeholders `{k}`,
//! `{context}`, `{marks}`, `{kind}`, and `{identifier}`. The default template
//! ships as an asset and can be overridden per run; substitution is a single
//! pass over the template, so placeholder-shaped text inside substituted
//! values (e.g. braces in source-code context) is never re-expanded.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::context::{ContextBlock, ContextMode};
use crate::detect::AbbreviationCandidate;
use crate::ident::IdentifierOccurrence;

/// The prompt template shipped with the crate (the basic few-shot prompt).
pub const DEFAULT_BASIC_TEMPLATE: &str = include_str!("../assets/basic_prompt.txt");

/// The round-two marking sentence shipped with the crate.
pub const DEFAULT_MARKING_TEMPLATE: &str = include_str!("../assets/marking_sentence.txt");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShotExample {
    pub kind: String,
    pub input: String,
    pub output: String,
}

impl FewShotExample {
    fn new(kind: &str, input: &str, output: &str) -> Self {
        FewShotExample { kind: kind.into(), input: input.into(), output: output.into() }
    }
}

/// Everything needed to render round-one and round-two prompts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub role_text: String,
    pub task_text: String,
    /// The "answer in the background k times" self-consistency count.
    pub self_consistency_k: u32,
    /// Few-shot examples; empty omits the Examples section.
    pub examples: Vec<FewShotExample>,
    /// Full template override; `None` renders role/task/examples directly.
    pub basic_template: Option<String>,
    /// Sentence template naming still-unexpanded tokens, with `{marks}` and
    /// `{previous}` placeholders.
    pub marking_template: String,
}

impl Default for PromptSpec {
    fn default() -> Self {
        PromptSpec {
            role_text: "You are a smart code maintainer. You will be asked questions related \
                        to abbreviation expansion. You can mimic answering them in the \
                        background {k} times and provide me with the most frequently appearing \
                        answer. Furthermore, please strictly adhere to the output format \
                        specified in the question. There is no need to explain your answer."
                .to_string(),
            task_text: "I am going to give you a Java identifier. You should output a new \
                        identifier by expanding all abbreviations in the input identifier \
                        without any explanation. Please ignore the length of the new \
                        identifier and strictly follow the format given in the examples."
                .to_string(),
            self_consistency_k: 15,
            examples: vec![
                FewShotExample::new("VariableName", "textEvt", "textEvent"),
                FewShotExample::new("MethodName", "getPurchaseURL", "GetPurchaseUniformResourceLocator"),
                FewShotExample::new("VariableName", "overlinePosStr", "overlinePositionString"),
            ],
            basic_template: None,
            marking_template: DEFAULT_MARKING_TEMPLATE.trim_end().to_string(),
        }
    }
}

impl PromptSpec {
    /// The effective template: the override if set, otherwise the template
    /// generated from role/task/examples.
    pub fn template(&self) -> String {
        match &self.basic_template {
            Some(t) => t.clone(),
            None => self.generated_template(),
        }
    }

    fn generated_template(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.role_text);
        out.push(' ');
        out.push_str(&self.task_text);
        out.push_str("\n\n");
        if !self.examples.is_empty() {
            out.push_str("Examples:\n\n");
            for ex in &self.examples {
                out.push_str(&format!(
                    "Input: \"{}\" \"{}\"\nOutput: \"{}\"\n\n",
                    ex.kind, ex.input, ex.output
                ));
            }
        }
        out.push_str("{context}{marks}The given identifier is \"{kind}\" \"{identifier}\"");
        out
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("round-two prompt needs a non-empty list of marked abbreviations")]
    EmptyMarkList,
}

/// Replace `{name}` placeholders in one pass; unknown braces stay literal.
fn render(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    'outer: while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open..];
        for (name, value) in values {
            let pattern_len = name.len() + 2;
            let bytes = after.as_bytes();
            if bytes.len() >= pattern_len
                && bytes[pattern_len - 1] == b'}'
                && &bytes[1..pattern_len - 1] == name.as_bytes()
            {
                out.push_str(value);
                rest = &after[pattern_len..];
                continue 'outer;
            }
        }
        out.push('{');
        rest = &after[1..];
    }
    out.push_str(rest);
    out
}

fn context_section(ctx: &ContextBlock) -> String {
    let label = match ctx.mode {
        ContextMode::None => return String::new(),
        ContextMode::EnclosingFile => "The enclosing file is:",
        ContextMode::SurroundingCode => "The surrounding source code is:",
        ContextMode::KnowledgeGraph => "The knowledge graph is:",
    };
    if ctx.text.is_empty() {
        return String::new();
    }
    format!("{label}\n{}\n\n", ctx.text)
}

fn render_prompt(
    occ: &IdentifierOccurrence,
    spec: &PromptSpec,
    context: &str,
    marks: &str,
) -> String {
    let k = spec.self_consistency_k.to_string();
    let kind = occ.kind.to_string();
    let rendered = render(
        &spec.template(),
        &[
            ("k", k.as_str()),
            ("context", context),
            ("marks", marks),
            ("kind", kind.as_str()),
            ("identifier", occ.name.as_str()),
        ],
    );
    rendered.trim_end().to_string()
}

/// The plain few-shot prompt: no context, no marking sentence.
pub fn build_basic_prompt(occ: &IdentifierOccurrence, spec: &PromptSpec) -> String {
    render_prompt(occ, spec, "", "")
}

/// The round-one prompt: basic prompt plus a labeled context section.
pub fn build_context_prompt(
    occ: &IdentifierOccurrence,
    ctx: &ContextBlock,
    spec: &PromptSpec,
) -> String {
    render_prompt(occ, spec, &context_section(ctx), "")
}

/// The round-two prompt: context prompt plus a sentence naming the tokens of
/// the previous answer that are still abbreviations.
pub fn build_marked_prompt(
    occ: &IdentifierOccurrence,
    ctx: &ContextBlock,
    missed: &[AbbreviationCandidate],
    first_round_output: &str,
    spec: &PromptSpec,
) -> Result<String, PromptError> {
    if missed.is_empty() {
        return Err(PromptError::EmptyMarkList);
    }
    let list = missed
        .iter()
        .map(|c| format!("\"{}\"", c.token_text))
        .collect::<Vec<_>>()
        .join(", ");
    let sentence = render(
        &spec.marking_template,
        &[("marks", list.as_str()), ("previous", first_round_output)],
    );
    let marks = format!("{sentence}\n\n");
    Ok(render_prompt(occ, spec, &context_section(ctx), &marks))
}
