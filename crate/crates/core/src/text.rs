//! Sentence normalization and tokenization shared by the memory and the engine.

/// Trims and collapses internal whitespace runs to a single space.
pub fn normalize(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Case-insensitive identity key of a sentence, used for dedup and blocked-entailment matching.
pub fn sentence_key(text: &str) -> String {
    normalize(text).to_lowercase()
}

/// Lowercases and splits on every maximal run of non-alphanumeric characters.
///
/// No stemming and no stopword removal.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Uppercases the first character.
pub fn capitalize(text: &str) -> String {
    let mut chars = text.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Ensures the sentence ends with terminal punctuation.
pub fn with_period(text: &str) -> String {
    let t = text.trim_end();
    if t.ends_with('.') || t.ends_with('!') || t.ends_with('?') {
        t.to_string()
    } else {
        format!("{t}.")
    }
}

/// Strips trailing sentence punctuation.
pub fn strip_terminal(text: &str) -> &str {
    text.trim().trim_end_matches(['.', '!', '?']).trim_end()
}
