//! Writes a generated record file and a matching sentence-embedding file,
//! the two inputs the `claimdet` binary expects from data preparation.
//!
//! ```sh
//! cargo run --example write_corpus -- out_dir [records] [seed]
//! claimdet train --records out_dir/records.jsonl --embeddings out_dir/sentences.emb --checkpoint model.ckpt
//! ```

use std::path::PathBuf;

use claimdet::corpus::synthetic::{synthetic_corpus, SyntheticConfig};
use claimdet::corpus::write_records;
use claimdet::semantic::{fallback_embed, EmbeddingTable, SEMANTIC_DIM};

fn main() -> claimdet::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "synthetic".into()));
    let records: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(600);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    std::fs::create_dir_all(&dir).map_err(|e| claimdet::Error::Format(format!("{}: {e}", dir.display())))?;

    let corpus = synthetic_corpus(&SyntheticConfig {
        records,
        seed,
        ..Default::default()
    });
    write_records(dir.join("records.jsonl"), &corpus)?;

    // Stand-in sentence vectors; a real pipeline would use a sentence encoder here.
    let mut table = EmbeddingTable::new(SEMANTIC_DIM);
    for r in &corpus {
        table.insert(r.id.clone(), fallback_embed(&r.text, SEMANTIC_DIM).iter().map(|&x| x as f32).collect())?;
    }
    table.save(dir.join("sentences.emb"))?;
    println!("wrote {} records to {}", corpus.len(), dir.display());
    Ok(())
}
