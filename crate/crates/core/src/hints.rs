//! Surface cues from the annotation guidelines, for error analysis only.

use std::collections::BTreeSet;

use serde::Serialize;

const DEFAULT_DOUBT_WORDS: &str = include_str!("../data/doubt_words.txt");

const NUMBER_WORDS: &[&str] = &[
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "eleven", "twelve",
    "twenty", "thirty", "forty", "fifty", "hundred", "thousand", "million", "billion", "percent",
];

const NEGATIONS: &[&str] = &[
    "not", "no", "never", "none", "nobody", "nothing", "neither", "nor", "cannot", "without",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Hint {
    HasNumber,
    HasDoubtWord,
    IsQuestion,
    HasNegation,
}

/// Word list for [`Hint::HasDoubtWord`]; one lower-case word per line, `#` comments.
#[derive(Clone, Debug, PartialEq)]
pub struct DoubtLexicon(BTreeSet<String>);

impl Default for DoubtLexicon {
    fn default() -> Self {
        Self::parse(DEFAULT_DOUBT_WORDS)
    }
}

impl DoubtLexicon {
    pub fn parse(text: &str) -> Self {
        DoubtLexicon(
            text.lines()
                .map(|l| l.split('#').next().unwrap_or("").trim().to_lowercase())
                .filter(|l| !l.is_empty())
                .collect(),
        )
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }
}

/// Cue tags present in `text`, in a fixed order.
pub fn guideline_hints(text: &str, doubt: &DoubtLexicon) -> Vec<Hint> {
    let lower = text.to_lowercase();
    let words: Vec<&str> = lower
        .split(|c: char| !(c.is_alphanumeric() || c == '\''))
        .filter(|w| !w.is_empty())
        .collect();
    let mut hints = Vec::new();
    if lower.chars().any(|c| c.is_ascii_digit()) || words.iter().any(|w| NUMBER_WORDS.contains(w)) {
        hints.push(Hint::HasNumber);
    }
    if words.iter().any(|w| doubt.contains(w)) {
        hints.push(Hint::HasDoubtWord);
    }
    if lower.contains('?') {
        hints.push(Hint::IsQuestion);
    }
    if words.iter().any(|w| NEGATIONS.contains(w) || w.ends_with("n't")) {
        hints.push(Hint::HasNegation);
    }
    hints
}
