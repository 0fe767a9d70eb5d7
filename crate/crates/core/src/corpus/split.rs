use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{Label, Record};
use crate::error::{Error, Result};
use crate::nn::Rng;

pub const TRAIN_FRACTION: f64 = 0.70;
pub const VAL_FRACTION: f64 = 0.15;
/// Minimum number of binary-labelled records accepted by [`split`].
pub const MIN_SPLIT_RECORDS: usize = 10;

/// Lower-cased, whitespace-collapsed text used as the duplicate key.
pub fn normalized_text(text: &str) -> String {
    text.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Drops later items whose normalized text was already seen; order is kept.
pub fn dedup_by<T>(items: Vec<T>, text: impl Fn(&T) -> &str) -> Vec<T> {
    let mut seen = HashSet::new();
    items
        .into_iter()
        .filter(|it| seen.insert(normalized_text(text(it))))
        .collect()
}

pub fn dedup(records: Vec<Record>) -> Vec<Record> {
    dedup_by(records, |r| r.text.as_str())
}

/// Disjoint train/validation/test id lists. Ids appear in input order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
    pub seed: u64,
}

impl Split {
    /// Partitions `records` by membership; records outside the split are dropped.
    pub fn partition(&self, records: &[Record]) -> (Vec<Record>, Vec<Record>, Vec<Record>) {
        let train: HashSet<&str> = self.train.iter().map(String::as_str).collect();
        let val: HashSet<&str> = self.val.iter().map(String::as_str).collect();
        let test: HashSet<&str> = self.test.iter().map(String::as_str).collect();
        let pick = |set: &HashSet<&str>| {
            records
                .iter()
                .filter(|r| set.contains(r.id.as_str()))
                .cloned()
                .collect::<Vec<_>>()
        };
        (pick(&train), pick(&val), pick(&test))
    }

    pub fn part_of(&self, id: &str) -> Option<&'static str> {
        if self.train.iter().any(|x| x == id) {
            Some("train")
        } else if self.val.iter().any(|x| x == id) {
            Some("val")
        } else if self.test.iter().any(|x| x == id) {
            Some("test")
        } else {
            None
        }
    }
}

fn check_unique_ids(records: &[Record]) -> Result<()> {
    let mut seen = HashSet::new();
    for r in records {
        if !seen.insert(r.id.as_str()) {
            return Err(Error::InvalidRecord {
                id: r.id.clone(),
                message: "duplicate id".into(),
            });
        }
    }
    Ok(())
}

/// Stratified 70:15:15 split. Obscure (`x`) records are excluded.
pub fn split(records: &[Record], seed: u64) -> Result<Split> {
    check_unique_ids(records)?;
    let eligible: Vec<&Record> = records.iter().filter(|r| r.label != Label::Obscure).collect();
    if eligible.len() < MIN_SPLIT_RECORDS {
        return Err(Error::InsufficientData(format!(
            "split needs at least {MIN_SPLIT_RECORDS} labelled records, got {}",
            eligible.len()
        )));
    }
    let mut rng = Rng::new(seed);
    let mut parts: [BTreeSet<usize>; 3] = Default::default();
    for label in [Label::NonClaim, Label::Claim] {
        let mut stratum: Vec<usize> = (0..eligible.len()).filter(|&i| eligible[i].label == label).collect();
        let n = stratum.len();
        let n_train = (n as f64 * TRAIN_FRACTION).round() as usize;
        let n_val = (n as f64 * VAL_FRACTION).round() as usize;
        if n_train == 0 || n_val == 0 || n_train + n_val >= n {
            return Err(Error::InsufficientData(format!(
                "stratum {label:?} has {n} records, too few for a 70:15:15 split"
            )));
        }
        rng.shuffle(&mut stratum);
        parts[0].extend(&stratum[..n_train]);
        parts[1].extend(&stratum[n_train..n_train + n_val]);
        parts[2].extend(&stratum[n_train + n_val..]);
    }
    let ids = |set: &BTreeSet<usize>| set.iter().map(|&i| eligible[i].id.clone()).collect();
    Ok(Split {
        train: ids(&parts[0]),
        val: ids(&parts[1]),
        test: ids(&parts[2]),
        seed,
    })
}

/// Randomly reduces the majority class to the size of the minority class.
/// Obscure records are dropped; the survivors keep their input order.
pub fn downsample(records: &[Record], seed: u64) -> Result<Vec<Record>> {
    let claims: Vec<usize> = (0..records.len()).filter(|&i| records[i].label == Label::Claim).collect();
    let others: Vec<usize> = (0..records.len()).filter(|&i| records[i].label == Label::NonClaim).collect();
    if claims.is_empty() || others.is_empty() {
        return Err(Error::InsufficientData(format!(
            "downsampling needs both classes (claims={}, non-claims={})",
            claims.len(),
            others.len()
        )));
    }
    let (major, minor) = if claims.len() >= others.len() {
        (claims, others)
    } else {
        (others, claims)
    };
    let mut rng = Rng::new(seed);
    let kept = rng.sample_indices(major.len(), minor.len());
    let mut chosen: Vec<usize> = minor.into_iter().chain(kept.into_iter().map(|k| major[k])).collect();
    chosen.sort_unstable();
    Ok(chosen.into_iter().map(|i| records[i].clone()).collect())
}
