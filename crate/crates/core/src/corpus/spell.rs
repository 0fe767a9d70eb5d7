//! Frequency-dictionary spelling correction using symmetric deletes.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};

pub const DEFAULT_MAX_EDIT_DISTANCE: usize = 2;

#[derive(Clone, Debug)]
pub struct SpellDictionary {
    max_distance: usize,
    frequencies: HashMap<String, u64>,
    deletes: HashMap<String, Vec<String>>,
}

impl Default for SpellDictionary {
    fn default() -> Self {
        Self::new(DEFAULT_MAX_EDIT_DISTANCE)
    }
}

impl SpellDictionary {
    pub fn new(max_distance: usize) -> Self {
        SpellDictionary {
            max_distance,
            frequencies: HashMap::new(),
            deletes: HashMap::new(),
        }
    }

    pub fn max_distance(&self) -> usize {
        self.max_distance
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// Adds `term` (lower-cased) with the given corpus count. Repeated terms
    /// accumulate. Only ASCII-alphabetic terms are accepted as corrections.
    pub fn insert(&mut self, term: &str, frequency: u64) -> Result<()> {
        if frequency == 0 {
            return Err(Error::InvalidArgument(format!("term {term:?} has zero frequency")));
        }
        let term = term.to_ascii_lowercase();
        if term.is_empty() || !term.bytes().all(|b| b.is_ascii_alphabetic()) {
            return Err(Error::InvalidArgument(format!("term {term:?} is not alphabetic ASCII")));
        }
        let slot = self.frequencies.entry(term.clone()).or_insert(0);
        if *slot == 0 {
            for d in deletes(&term, self.max_distance) {
                self.deletes.entry(d).or_default().push(term.clone());
            }
        }
        *slot += frequency;
        Ok(())
    }

    /// Loads `term<TAB>frequency` lines.
    pub fn load(path: impl AsRef<Path>, max_distance: usize) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut dict = SpellDictionary::new(max_distance);
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message,
            };
            let (term, freq) = line
                .split_once('\t')
                .ok_or_else(|| parse_err("expected term<TAB>frequency".into()))?;
            let freq: u64 = freq
                .trim()
                .parse()
                .map_err(|_| parse_err(format!("bad frequency {freq:?}")))?;
            dict.insert(term.trim(), freq).map_err(|e| parse_err(e.to_string()))?;
        }
        Ok(dict)
    }

    pub fn frequency(&self, term: &str) -> Option<u64> {
        self.frequencies.get(term).copied()
    }

    /// Best dictionary term within the edit budget: smallest distance, then
    /// highest frequency, then lexicographic order.
    pub fn lookup(&self, word: &str) -> Option<(&str, usize)> {
        let word = word.to_ascii_lowercase();
        if let Some((term, _)) = self.frequencies.get_key_value(&word) {
            return Some((term.as_str(), 0));
        }
        let mut best: Option<(&str, usize, u64)> = None;
        for d in deletes(&word, self.max_distance) {
            let candidates = self
                .frequencies
                .get_key_value(&d)
                .map(|(k, _)| k)
                .into_iter()
                .chain(self.deletes.get(&d).into_iter().flatten());
            for term in candidates {
                let dist = osa_distance(&word, term);
                if dist > self.max_distance {
                    continue;
                }
                let freq = self.frequencies[term];
                let better = match best {
                    None => true,
                    Some((bt, bd, bf)) => (dist, std::cmp::Reverse(freq), term.as_str()) < (bd, std::cmp::Reverse(bf), bt),
                };
                if better {
                    best = Some((term.as_str(), dist, freq));
                }
            }
        }
        best.map(|(t, d, _)| (t, d))
    }

    /// Corrects a single alphabetic word; anything else, known words and words
    /// without a candidate are returned unchanged.
    pub fn correct_word(&self, word: &str) -> String {
        if self.is_empty() || word.is_empty() || !word.bytes().all(|b| b.is_ascii_alphabetic()) {
            return word.to_string();
        }
        match self.lookup(word) {
            Some((_, 0)) | None => word.to_string(),
            Some((term, _)) => term.to_string(),
        }
    }
}

/// Every string reachable from `word` by deleting up to `max` characters, including `word`.
fn deletes(word: &str, max: usize) -> Vec<String> {
    let mut out = vec![word.to_string()];
    let mut frontier = vec![word.to_string()];
    for _ in 0..max {
        let mut next = Vec::new();
        for w in &frontier {
            let chars: Vec<char> = w.chars().collect();
            for i in 0..chars.len() {
                let d: String = chars[..i].iter().chain(&chars[i + 1..]).collect();
                if !out.contains(&d) {
                    out.push(d.clone());
                    next.push(d);
                }
            }
        }
        frontier = next;
    }
    out
}

/// Optimal string alignment distance (Levenshtein plus adjacent transpositions).
pub fn osa_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let (n, m) = (a.len(), b.len());
    let mut d = vec![vec![0usize; m + 1]; n + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=m {
        d[0][j] = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let cost = usize::from(a[i - 1] != b[j - 1]);
            let mut v = (d[i - 1][j] + 1).min(d[i][j - 1] + 1).min(d[i - 1][j - 1] + cost);
            if i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1] {
                v = v.min(d[i - 2][j - 2] + 1);
            }
            d[i][j] = v;
        }
    }
    d[n][m]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dict() -> SpellDictionary {
        let mut d = SpellDictionary::default();
        for (t, f) in [("corona", 50), ("virus", 40), ("vaccine", 30), ("cures", 5), ("curse", 9)] {
            d.insert(t, f).unwrap();
        }
        d
    }

    #[test]
    fn distances() {
        assert_eq!(osa_distance("corona", "corona"), 0);
        assert_eq!(osa_distance("corna", "corona"), 1);
        assert_eq!(osa_distance("virsu", "virus"), 1);
        assert_eq!(osa_distance("kitten", "sitting"), 3);
    }

    #[test]
    fn corrects_within_budget() {
        let d = dict();
        assert_eq!(d.correct_word("coronna"), "corona");
        assert_eq!(d.correct_word("vaccnie"), "vaccine");
        assert_eq!(d.correct_word("vrius"), "virus");
    }

    #[test]
    fn keeps_unknown_and_known_words() {
        let d = dict();
        assert_eq!(d.correct_word("Corona"), "Corona");
        assert_eq!(d.correct_word("hospital"), "hospital");
        assert_eq!(d.correct_word("c0r0na"), "c0r0na");
    }

    #[test]
    fn ties_broken_by_frequency() {
        let d = dict();
        // one insertion from both "cures" and "curse"; the latter is more frequent
        assert_eq!(d.lookup("curs"), Some(("curse", 1)));
    }

    #[test]
    fn rejects_bad_terms() {
        let mut d = SpellDictionary::default();
        assert!(d.insert("abc", 0).is_err());
        assert!(d.insert("a1", 3).is_err());
    }
}
