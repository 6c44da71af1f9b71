//! Reply parsing: pull a single identifier out of a model reply.

use abbrex_core::ident::validate_identifier_name;

/// Strip matching quote pairs, backticks, and trailing sentence punctuation.
fn clean_candidate(text: &str) -> &str {
    let mut s = text.trim();
    loop {
        let trimmed = s.trim_matches(|c| c == '.' || c == ',' || c == ';').trim();
        let unquoted = strip_quotes(trimmed);
        if unquoted == s {
            return s;
        }
        s = unquoted;
    }
}

fn strip_quotes(s: &str) -> &str {
    for (open, close) in [('"', '"'), ('\'', '\''), ('`', '`'), ('“', '”'), ('«', '»')] {
        if s.len() >= 2 && s.starts_with(open) && s.ends_with(close) {
            let mut chars = s.chars();
            chars.next();
            chars.next_back();
            return chars.as_str();
        }
    }
    s
}

/// Extract the proposed identifier from a reply, if there is one.
///
/// Accepts the instructed format — a line `Output: "<identifier>"` (quotes
/// optional) — or a reply that is just one bare identifier line. Anything
/// else (explanations, multiple candidates, lexically invalid text) parses to
/// `None`.
pub fn parse_reply(raw: &str) -> Option<String> {
    for line in raw.lines() {
        let line = line.trim();
        let lower = line.to_lowercase();
        if let Some(rest) = lower.strip_prefix("output") {
            if rest.trim_start().starts_with(':') {
                let after = &line[line.find(':').expect("prefix checked") + 1..];
                let candidate = clean_candidate(after);
                if validate_identifier_name(candidate).is_ok() {
                    return Some(candidate.to_string());
                }
                return None;
            }
        }
    }

    let mut non_empty = raw.lines().map(str::trim).filter(|l| !l.is_empty());
    let (first, second) = (non_empty.next(), non_empty.next());
    match (first, second) {
        (Some(line), None) => {
            let candidate = clean_candidate(line);
            validate_identifier_name(candidate).ok().map(|_| candidate.to_string())
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_instructed_output_line() {
        assert_eq!(parse_reply("Output: \"textEvent\""), Some("textEvent".to_string()));
        assert_eq!(parse_reply("Output: textEvent"), Some("textEvent".to_string()));
        assert_eq!(parse_reply("output: `waitTime`"), Some("waitTime".to_string()));
        assert_eq!(parse_reply("Output: \"waitTime\"."), Some("waitTime".to_string()));
    }

    #[test]
    fn parses_a_bare_identifier_line() {
        assert_eq!(parse_reply("textEvent"), Some("textEvent".to_string()));
        assert_eq!(parse_reply("  waitTime  \n"), Some("waitTime".to_string()));
        assert_eq!(parse_reply("\"viewBox\""), Some("viewBox".to_string()));
    }

    #[test]
    fn finds_the_output_line_in_a_longer_reply() {
        let reply = "Sure, here is the expansion.\nOutput: \"dragDropEnd\"\nHope that helps!";
        assert_eq!(parse_reply(reply), Some("dragDropEnd".to_string()));
    }

    #[test]
    fn refuses_everything_else() {
        assert_eq!(parse_reply("I cannot help with that"), None);
        assert_eq!(parse_reply("line one\nline two"), None);
        assert_eq!(parse_reply(""), None);
        assert_eq!(parse_reply("Output: \"not a single identifier\""), None);
        assert_eq!(parse_reply("9starts_with_digit"), None);
    }
}
