use std::collections::HashMap;

use crate::error::{Error, Result};

pub const BOS: &str = "<BOS>";
pub const EOS: &str = "<EOS>";
pub const UNK: &str = "<UNK>";
/// Index reserved for out-of-vocabulary k-grams.
pub const UNK_INDEX: usize = 0;
/// k-grams seen this many times or fewer are not indexed.
pub const DISCARD_AT_OR_BELOW: u64 = 2;

pub type Ngram = Vec<String>;

/// Sliding k-grams over a tag sequence padded with `⌊(k−1)/2⌋` BOS tags on the
/// left and `⌈(k−1)/2⌉` EOS tags on the right; one k-gram per input tag.
pub fn pos_ngrams<S: AsRef<str>>(tags: &[S], k: usize) -> Result<Vec<Ngram>> {
    if !(2..=4).contains(&k) {
        return Err(Error::InvalidArgument(format!("n-gram order {k} not in {{2,3,4}}")));
    }
    if tags.is_empty() {
        return Err(Error::InvalidArgument("n-grams of an empty tag sequence".into()));
    }
    Ok(padded_ngrams(tags, k))
}

pub(crate) fn padded_ngrams<S: AsRef<str>>(tags: &[S], k: usize) -> Vec<Ngram> {
    let left = (k - 1) / 2;
    let right = k - 1 - left;
    let padded: Vec<&str> = std::iter::repeat_n(BOS, left)
        .chain(tags.iter().map(AsRef::as_ref))
        .chain(std::iter::repeat_n(EOS, right))
        .collect();
    padded
        .windows(k)
        .map(|w| w.iter().map(|s| s.to_string()).collect())
        .collect()
}

/// k-gram → dense index map. Index 0 is the unknown k-gram; kept k-grams are
/// ordered by descending count, ties broken lexicographically.
#[derive(Clone, Debug, PartialEq)]
pub struct NgramVocab {
    k: usize,
    entries: Vec<Ngram>,
    counts: Vec<u64>,
    index: HashMap<Ngram, usize>,
}

impl NgramVocab {
    /// Empty vocabulary holding only the reserved unknown entry.
    pub fn reserved_only(k: usize) -> Self {
        NgramVocab {
            k,
            entries: vec![vec![UNK.to_string()]],
            counts: vec![0],
            index: HashMap::new(),
        }
    }

    /// Counts k-grams over `sequences` and indexes those seen more than
    /// [`DISCARD_AT_OR_BELOW`] times.
    pub fn build<'a, I, S>(sequences: I, k: usize) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [S]>,
        S: AsRef<str> + 'a,
    {
        let mut vocab = Self::reserved_only(k);
        let mut counts: HashMap<Ngram, u64> = HashMap::new();
        for seq in sequences {
            if seq.is_empty() {
                continue;
            }
            for g in pos_ngrams(seq, k)? {
                *counts.entry(g).or_insert(0) += 1;
            }
        }
        let mut kept: Vec<(Ngram, u64)> = counts.into_iter().filter(|(_, c)| *c > DISCARD_AT_OR_BELOW).collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        for (g, c) in kept {
            vocab.index.insert(g.clone(), vocab.entries.len());
            vocab.entries.push(g);
            vocab.counts.push(c);
        }
        Ok(vocab)
    }

    /// Rebuilds a vocabulary from its ordered entry list (index 0 must be the unknown entry).
    pub fn from_entries(k: usize, entries: Vec<Ngram>) -> Result<Self> {
        if entries.first().map(|e| e.as_slice()) != Some(&[UNK.to_string()][..]) {
            return Err(Error::Format(format!("first vocabulary entry must be {UNK}")));
        }
        let mut index = HashMap::new();
        for (i, e) in entries.iter().enumerate().skip(1) {
            if e.len() != k {
                return Err(Error::Format(format!("entry {} has {} tags, expected {k}", i, e.len())));
            }
            if index.insert(e.clone(), i).is_some() {
                return Err(Error::Format(format!("duplicate vocabulary entry {}", e.join("|"))));
            }
        }
        let counts = vec![0; entries.len()];
        Ok(NgramVocab {
            k,
            entries,
            counts,
            index,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of indices including the reserved unknown entry.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.len() <= 1
    }

    pub fn entries(&self) -> &[Ngram] {
        &self.entries
    }

    /// Corpus count for an index (0 for the unknown entry and for vocabularies read back from disk).
    pub fn count(&self, index: usize) -> u64 {
        self.counts[index]
    }

    pub fn lookup(&self, ngram: &[String]) -> usize {
        self.index.get(ngram).copied().unwrap_or(UNK_INDEX)
    }

    pub fn contains(&self, ngram: &[String]) -> bool {
        self.index.contains_key(ngram)
    }

    /// Index sequence for a tag sequence, one index per tag.
    pub fn encode<S: AsRef<str>>(&self, tags: &[S]) -> Result<Vec<usize>> {
        Ok(pos_ngrams(tags, self.k)?.iter().map(|g| self.lookup(g)).collect())
    }
}
