use std::collections::BTreeMap;

use serde::Serialize;

use crate::corpus::{Label, Record, Source, Split};

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Counts {
    pub records: usize,
    pub claims: usize,
    pub non_claims: usize,
    pub obscure: usize,
    pub tokens: usize,
    pub mean_words: f64,
}

impl Counts {
    fn add(&mut self, r: &Record) {
        self.records += 1;
        match r.label {
            Label::Claim => self.claims += 1,
            Label::NonClaim => self.non_claims += 1,
            Label::Obscure => self.obscure += 1,
        }
        self.tokens += r.tokens.len();
    }

    fn finish(&mut self, words: usize) {
        self.mean_words = if self.records == 0 {
            0.0
        } else {
            words as f64 / self.records as f64
        };
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct DatasetStats {
    pub total: Counts,
    pub by_source: BTreeMap<Source, Counts>,
    /// Present when a split was supplied: part name → source → counts.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub by_split: Option<BTreeMap<String, BTreeMap<Source, Counts>>>,
}

fn tally<'a>(records: impl Iterator<Item = &'a Record>) -> (Counts, BTreeMap<Source, Counts>) {
    let mut total = Counts::default();
    let mut total_words = 0;
    let mut by_source: BTreeMap<Source, (Counts, usize)> = BTreeMap::new();
    for r in records {
        let words = r.text.split_whitespace().count();
        total.add(r);
        total_words += words;
        let slot = by_source.entry(r.source).or_default();
        slot.0.add(r);
        slot.1 += words;
    }
    total.finish(total_words);
    let by_source = by_source
        .into_iter()
        .map(|(s, (mut c, w))| {
            c.finish(w);
            (s, c)
        })
        .collect();
    (total, by_source)
}

/// Claim/non-claim counts, token totals and mean words per record, overall,
/// per source and (optionally) per split part.
pub fn dataset_stats(records: &[Record], split: Option<&Split>) -> DatasetStats {
    let (total, by_source) = tally(records.iter());
    let by_split = split.map(|s| {
        let (train, val, test) = s.partition(records);
        [("train", train), ("val", val), ("test", test)]
            .into_iter()
            .map(|(name, part)| (name.to_string(), tally(part.iter()).1))
            .collect()
    });
    DatasetStats {
        total,
        by_source,
        by_split,
    }
}
