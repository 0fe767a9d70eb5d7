//! Template-generated tagged corpus for fixtures, examples and smoke tests.
//!
//! Claims and non-claims share sentence templates; the only systematic
//! difference is that a claim quantifies its object with a number
//! (`NUM`/`nummod`) where a non-claim uses a determiner.

use crate::corpus::{Label, Record, Source};
use crate::nn::Rng;

#[derive(Clone, Debug)]
pub struct SyntheticConfig {
    pub records: usize,
    pub claim_fraction: f64,
    /// Sources are assigned round-robin.
    pub sources: Vec<Source>,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            records: 600,
            claim_fraction: 0.5,
            sources: vec![Source::TWR, Source::OC, Source::PE],
            seed: 0,
        }
    }
}

const DET: &[&str] = &["the", "a", "this", "that", "every", "some"];
const ADJ: &[&str] = &["new", "local", "big", "strange", "cheap", "old", "public", "fresh", "whole", "free"];
const NOUN: &[&str] = &[
    "virus", "vaccine", "mask", "city", "hospital", "school", "garlic", "government", "study", "drink",
    "doctor", "market", "patient", "test", "lockdown", "water", "country", "office", "week", "cure",
];
const VERB: &[&str] = &[
    "kills", "cures", "needs", "closed", "found", "reported", "built", "sold", "saw", "tested", "blocks",
    "opened",
];
const PRON: &[&str] = &["i", "you", "we", "they", "she", "he"];
const ADV: &[&str] = &["really", "quickly", "today", "again", "already", "still", "now", "honestly"];
const AUX: &[&str] = &["did", "does", "can", "will", "should", "could"];
const ADP: &[&str] = &["in", "at", "near", "from", "for", "across"];
const NUM: &[&str] = &["2", "3", "five", "10", "12", "90", "100", "200", "seven", "1000", "40", "million"];

struct Builder {
    words: Vec<(String, &'static str, &'static str, usize)>,
}

impl Builder {
    fn push(&mut self, word: &str, upos: &'static str, deprel: &'static str, head_slot: usize) -> usize {
        self.words.push((word.to_string(), upos, deprel, head_slot));
        self.words.len() - 1
    }
}

fn pick<'a>(rng: &mut Rng, pool: &[&'a str]) -> &'a str {
    pool[rng.below(pool.len())]
}

/// Placeholder head slot; patched once the governing word is known.
const PENDING: usize = usize::MAX;

fn object_phrase(b: &mut Builder, rng: &mut Rng, claim: bool, verb: usize) {
    let quant = if claim {
        b.push(pick(rng, NUM), "NUM", "nummod", PENDING)
    } else {
        b.push(pick(rng, DET), "DET", "det", PENDING)
    };
    let adj = rng.bernoulli(0.4).then(|| b.push(pick(rng, ADJ), "ADJ", "amod", PENDING));
    let noun = b.push(pick(rng, NOUN), "NOUN", "obj", verb);
    b.words[quant].3 = noun;
    if let Some(a) = adj {
        b.words[a].3 = noun;
    }
}

fn sentence(rng: &mut Rng, claim: bool) -> Builder {
    let mut b = Builder { words: Vec::new() };
    match rng.below(3) {
        0 => {
            let det = b.push(pick(rng, DET), "DET", "det", PENDING);
            let adj = rng.bernoulli(0.5).then(|| b.push(pick(rng, ADJ), "ADJ", "amod", PENDING));
            let subj = b.push(pick(rng, NOUN), "NOUN", "nsubj", PENDING);
            let verb = b.push(pick(rng, VERB), "VERB", "root", PENDING);
            b.words[det].3 = subj;
            if let Some(a) = adj {
                b.words[a].3 = subj;
            }
            b.words[subj].3 = verb;
            object_phrase(&mut b, rng, claim, verb);
            if rng.bernoulli(0.5) {
                let adp = b.push(pick(rng, ADP), "ADP", "case", PENDING);
                let det = b.push(pick(rng, DET), "DET", "det", PENDING);
                let noun = b.push(pick(rng, NOUN), "NOUN", "obl", verb);
                b.words[adp].3 = noun;
                b.words[det].3 = noun;
            }
            if rng.bernoulli(0.3) {
                b.push(pick(rng, ADV), "ADV", "advmod", verb);
            }
        }
        1 => {
            let aux = b.push(pick(rng, AUX), "AUX", "aux", PENDING);
            let subj = b.push(pick(rng, PRON), "PRON", "nsubj", PENDING);
            let verb = b.push(pick(rng, VERB), "VERB", "root", PENDING);
            b.words[aux].3 = verb;
            b.words[subj].3 = verb;
            object_phrase(&mut b, rng, claim, verb);
            b.push("?", "PUNCT", "punct", verb);
        }
        _ => {
            let subj = b.push(pick(rng, PRON), "PRON", "nsubj", PENDING);
            let adv = rng.bernoulli(0.5).then(|| b.push(pick(rng, ADV), "ADV", "advmod", PENDING));
            let verb = b.push(pick(rng, VERB), "VERB", "root", PENDING);
            b.words[subj].3 = verb;
            if let Some(a) = adv {
                b.words[a].3 = verb;
            }
            object_phrase(&mut b, rng, claim, verb);
        }
    }
    b
}

/// Generates `cfg.records` tagged records, exactly `round(records * claim_fraction)` of them claims.
pub fn synthetic_corpus(cfg: &SyntheticConfig) -> Vec<Record> {
    let mut rng = Rng::new(cfg.seed);
    let n_claims = (cfg.records as f64 * cfg.claim_fraction).round() as usize;
    let mut labels: Vec<bool> = (0..cfg.records).map(|i| i < n_claims).collect();
    rng.shuffle(&mut labels);
    labels
        .into_iter()
        .enumerate()
        .map(|(i, claim)| {
            let b = sentence(&mut rng, claim);
            let tokens: Vec<String> = b.words.iter().map(|w| w.0.clone()).collect();
            let text = tokens.join(" ").replace(" ?", "?");
            Record {
                id: format!("syn-{i:05}"),
                text,
                upos: b.words.iter().map(|w| w.1.to_string()).collect(),
                deprel: b.words.iter().map(|w| w.2.to_string()).collect(),
                head: b
                    .words
                    .iter()
                    .map(|w| if w.3 == PENDING { 0 } else { w.3 + 1 })
                    .collect(),
                tokens,
                label: if claim { Label::Claim } else { Label::NonClaim },
                source: cfg.sources[i % cfg.sources.len()],
                viewpoint: None,
            }
        })
        .map(|mut r| {
            r.viewpoint = Some(r.source.viewpoint());
            r
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_are_valid_and_separable() {
        let recs = synthetic_corpus(&SyntheticConfig {
            records: 300,
            ..Default::default()
        });
        assert_eq!(recs.len(), 300);
        assert_eq!(recs.iter().filter(|r| r.label == Label::Claim).count(), 150);
        for r in &recs {
            r.validate().unwrap();
            assert_eq!(r.head.iter().filter(|&&h| h == 0).count(), 1, "{r:?}");
            let has_num = r.upos.iter().any(|t| t == "NUM");
            assert_eq!(has_num, r.label == Label::Claim);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = SyntheticConfig {
            records: 50,
            ..Default::default()
        };
        assert_eq!(synthetic_corpus(&cfg), synthetic_corpus(&cfg));
    }
}
