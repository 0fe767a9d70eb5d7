//! Builds the POS tri-gram vocabulary of a generated corpus, trains skip-gram
//! vectors over it and lists the nearest neighbours of the most frequent n-grams.
//!
//! ```sh
//! cargo run --release --example pos_skipgram -- [k]
//! ```

use claimdet::corpus::synthetic::{synthetic_corpus, SyntheticConfig};
use claimdet::nn::Rng;
use claimdet::pos::{train_skipgram, NgramVocab, SkipGramConfig};

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb).max(1e-12)
}

fn main() -> claimdet::Result<()> {
    let k = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let records = synthetic_corpus(&SyntheticConfig::default());
    let vocab = NgramVocab::build(records.iter().map(|r| r.upos.as_slice()), k)?;
    println!("{} records, {} {k}-grams kept", records.len(), vocab.len());
    let seqs: Vec<Vec<usize>> = records.iter().map(|r| vocab.encode(&r.upos)).collect::<claimdet::Result<_>>()?;
    let model = train_skipgram(&seqs, vocab.len(), &SkipGramConfig::default(), &mut Rng::new(3))?;
    println!("loss per epoch: {:?}", model.epoch_losses);
    let table = &model.embeddings;
    for i in 1..vocab.len().min(6) {
        let mut near: Vec<(f64, usize)> = (1..vocab.len())
            .filter(|&j| j != i)
            .map(|j| (cosine(table.row(i), table.row(j)), j))
            .collect();
        near.sort_by(|a, b| b.0.total_cmp(&a.0));
        let names: Vec<String> = near
            .iter()
            .take(3)
            .map(|(c, j)| format!("{} ({c:.2})", vocab.entries()[*j].join(" ")))
            .collect();
        println!("{:<28} -> {}", vocab.entries()[i].join(" "), names.join(", "));
    }
    Ok(())
}
