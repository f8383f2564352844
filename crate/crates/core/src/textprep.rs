//! Text normalization into sentences of lowercase tokens, plus the
//! social-media filters (URL stripping, English detection, topic matching).

use serde::{Deserialize, Serialize};

use crate::corpus::ReferenceCorpus;

/// Sentences of normalized tokens in source order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreparedText {
    pub sentences: Vec<Vec<String>>,
}

impl PreparedText {
    pub fn total_tokens(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.sentences.iter().flatten().map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Re-joins tokens as plain text, one period-terminated sentence each.
    pub fn to_text(&self) -> String {
        self.sentences
            .iter()
            .map(|s| format!("{}.", s.join(" ")))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn is_url(chunk: &str) -> bool {
    let lead = chunk.trim_start_matches(|c: char| !c.is_alphanumeric());
    let lower = lead.to_ascii_lowercase();
    if lower.starts_with("www.") {
        return true;
    }
    match lower.find("://") {
        Some(pos) if pos > 0 => lower[..pos]
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.')),
        _ => false,
    }
}

fn ends_sentence(chunk: &str) -> bool {
    let trimmed = chunk.trim_end_matches(['"', '\'', ')', ']', '}', '»', '”', '’']);
    trimmed.ends_with(['.', '!', '?'])
}

fn is_joiner(c: char) -> bool {
    c == '-' || c == '\''
}

fn push_tokens(chunk: &str, out: &mut Vec<String>) {
    for piece in chunk.split(|c: char| !(c.is_alphanumeric() || is_joiner(c))) {
        let core = piece.trim_matches(is_joiner);
        if !core.is_empty() {
            // some case mappings emit combining marks (e.g. 'İ'); drop them
            let lower: String = core
                .chars()
                .flat_map(char::to_lowercase)
                .filter(|c| c.is_alphanumeric() || is_joiner(*c))
                .collect();
            out.push(lower);
        }
    }
}

/// Splits `text` into sentences and tokens.
///
/// Sentences end at `.`, `!` or `?` followed by whitespace or end of input.
/// Tokens keep internal hyphens and apostrophes; every other punctuation
/// character separates tokens.
pub fn prepare(text: &str, strip_urls: bool) -> PreparedText {
    let mut sentences = Vec::new();
    let mut current = Vec::new();
    for chunk in text.split_whitespace() {
        if !(strip_urls && is_url(chunk)) {
            push_tokens(chunk, &mut current);
        }
        if ends_sentence(chunk) && !current.is_empty() {
            sentences.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        sentences.push(current);
    }
    PreparedText { sentences }
}

/// English heuristic: ASCII-only source and at most half of the tokens
/// outside the reference vocabulary. Hyphenated tokens match as a whole.
pub fn is_english(prepared: &PreparedText, raw: &str, corpus: &ReferenceCorpus) -> bool {
    if !raw.is_ascii() {
        return false;
    }
    let total = prepared.total_tokens();
    if total == 0 {
        return false;
    }
    let unmatched = prepared.tokens().filter(|t| !corpus.contains(t)).count();
    unmatched * 2 <= total
}

/// True when any of `terms` occurs as a whole token. An empty term list
/// disables the filter.
pub fn matches_topic(prepared: &PreparedText, terms: &[String]) -> bool {
    terms.is_empty() || prepared.tokens().any(|t| terms.iter().any(|term| term == t))
}
