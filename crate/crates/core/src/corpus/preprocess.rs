use crate::corpus::SpellDictionary;

/// Cleaned texts shorter than this many characters are rejected.
pub const MIN_CHARS: usize = 20;
/// Cleaned texts with fewer whitespace-separated words are rejected.
pub const MIN_WORDS: usize = 4;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Preprocessed {
    Clean(String),
    Rejected { chars: usize, words: usize },
}

impl Preprocessed {
    pub fn clean(&self) -> Option<&str> {
        match self {
            Preprocessed::Clean(s) => Some(s),
            Preprocessed::Rejected { .. } => None,
        }
    }

    pub fn is_rejected(&self) -> bool {
        matches!(self, Preprocessed::Rejected { .. })
    }
}

fn is_url(token: &str) -> bool {
    token.contains("://") || token.to_ascii_lowercase().starts_with("www.")
}

fn is_dropped_token(token: &str) -> bool {
    token.starts_with('#') || token.starts_with('@') || is_url(token)
}

/// Tweet cleaning: strip non-ASCII, drop hashtag, handle and URL tokens,
/// spell-correct the remaining words and collapse whitespace. Results under
/// [`MIN_CHARS`] characters or [`MIN_WORDS`] words are rejected.
///
/// Non-ASCII is removed first so a token cannot turn into a hashtag on a second pass.
pub fn preprocess_tweet(text: &str, dict: &SpellDictionary) -> Preprocessed {
    let ascii: String = text.chars().filter(char::is_ascii).collect();
    let words: Vec<String> = ascii
        .split_ascii_whitespace()
        .filter(|t| !is_dropped_token(t))
        .map(|t| correct_token(t, dict))
        .filter(|t| !t.is_empty())
        .collect();
    let cleaned = words.join(" ");
    let chars = cleaned.len();
    if chars < MIN_CHARS || words.len() < MIN_WORDS {
        Preprocessed::Rejected {
            chars,
            words: words.len(),
        }
    } else {
        Preprocessed::Clean(cleaned)
    }
}

/// Spell-corrects the alphabetic core of a token, keeping surrounding punctuation.
fn correct_token(token: &str, dict: &SpellDictionary) -> String {
    if dict.is_empty() {
        return token.to_string();
    }
    let start = token.find(|c: char| !c.is_ascii_punctuation()).unwrap_or(token.len());
    let end = token
        .rfind(|c: char| !c.is_ascii_punctuation())
        .map_or(start, |i| i + 1);
    if start >= end {
        return token.to_string();
    }
    let core = &token[start..end];
    format!("{}{}{}", &token[..start], dict.correct_word(core), &token[end..])
}
