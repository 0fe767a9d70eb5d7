use serde::{Deserialize, Serialize};

use crate::corpus::Record;
use crate::error::{Error, Result};
use crate::pos::{pos_ngrams, Ngram, NgramVocab};

/// Dependency relations are always grouped in tri-grams.
pub const DEP_K: usize = 3;
/// Width of each of the token-position and parent-position signals.
pub const SIGNAL_DIM: usize = 10;

/// How token and parent positions enter the dependency encoding.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PositionalMode {
    /// Fixed sinusoidal signals.
    #[default]
    Sinusoidal,
    /// Trainable position tables, initialised to the sinusoidal values.
    Learned,
    /// No positional signal: the encoding is the raw tri-gram embedding.
    Off,
}

impl std::str::FromStr for PositionalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sinusoidal" => Ok(PositionalMode::Sinusoidal),
            "learned" => Ok(PositionalMode::Learned),
            "off" => Ok(PositionalMode::Off),
            other => Err(Error::InvalidArgument(format!("unknown positional mode {other:?}"))),
        }
    }
}

/// Padded tri-grams over dependency relations, one per token.
pub fn dep_trigrams<S: AsRef<str>>(deprels: &[S]) -> Result<Vec<Ngram>> {
    pos_ngrams(deprels, DEP_K)
}

/// Interleaved sinusoidal encoding: `[sin(i/ω₀), cos(i/ω₀), sin(i/ω₁), ...]`
/// with `ωₖ = 10000^(2k/dim)`.
pub fn position_signal(index: usize, dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    for (j, slot) in v.iter_mut().enumerate() {
        let pair = (j / 2) as f64;
        let angle = index as f64 / 10000f64.powf(2.0 * pair / dim as f64);
        *slot = if j % 2 == 0 { angle.sin() } else { angle.cos() };
    }
    v
}

/// A record's dependency view: tri-gram indices plus 1-based token positions
/// and parent positions (0 = root).
#[derive(Clone, Debug, PartialEq)]
pub struct DepSeq {
    pub trigrams: Vec<usize>,
    pub positions: Vec<usize>,
    pub parents: Vec<usize>,
}

impl DepSeq {
    pub fn new(trigrams: Vec<usize>, parents: Vec<usize>) -> Result<Self> {
        let n = trigrams.len();
        if n == 0 || parents.len() != n {
            return Err(Error::Shape(format!("{n} tri-grams but {} parent positions", parents.len())));
        }
        if let Some(&bad) = parents.iter().find(|&&p| p > n) {
            return Err(Error::InvalidArgument(format!("parent position {bad} outside [0, {n}]")));
        }
        Ok(DepSeq {
            trigrams,
            positions: (1..=n).collect(),
            parents,
        })
    }

    pub fn from_record(record: &Record, vocab: &NgramVocab) -> Result<Self> {
        if vocab.k() != DEP_K {
            return Err(Error::ConfigMismatch(format!("dependency vocabulary has k={}, expected {DEP_K}", vocab.k())));
        }
        Self::new(vocab.encode(&record.deprel)?, record.head.clone())
    }

    pub fn len(&self) -> usize {
        self.trigrams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trigrams.is_empty()
    }

    /// Keeps the first `max_len` positions; parent positions are left as-is.
    pub fn truncated(&self, max_len: usize) -> DepSeq {
        let n = self.len().min(max_len);
        DepSeq {
            trigrams: self.trigrams[..n].to_vec(),
            positions: self.positions[..n].to_vec(),
            parents: self.parents[..n].to_vec(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pos::{BOS, EOS};

    #[test]
    fn trigram_example() {
        let g = dep_trigrams(&["nsubj", "root", "obj"]).unwrap();
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        assert_eq!(g, vec![s(&[BOS, "nsubj", "root"]), s(&["nsubj", "root", "obj"]), s(&["root", "obj", EOS])]);
        assert_eq!(dep_trigrams(&["root"]).unwrap(), vec![s(&[BOS, "root", EOS])]);
    }

    #[test]
    fn signal_at_zero() {
        assert_eq!(position_signal(0, 10), vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn signal_matches_direct_evaluation() {
        let v = position_signal(3, 10);
        assert_eq!(v[0], 3f64.sin());
        assert_eq!(v[1], 3f64.cos());
        assert!((v[2] - (3.0 / 10000f64.powf(0.2)).sin()).abs() < 1e-15);
        let d: f64 = position_signal(1, 10)
            .iter()
            .zip(position_signal(2, 10))
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        assert!(d > 0.0);
    }

    #[test]
    fn parent_range_checked() {
        assert!(DepSeq::new(vec![1, 2], vec![0, 3]).is_err());
        assert!(DepSeq::new(vec![1, 2], vec![2, 0]).is_ok());
        assert!(DepSeq::new(vec![1], vec![]).is_err());
    }
}
