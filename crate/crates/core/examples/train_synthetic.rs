//! Trains the full model on a generated corpus with hashed sentence vectors
//! and prints the validation history.
//!
//! ```sh
//! cargo run --release --example train_synthetic -- [seed]
//! ```

use claimdet::corpus::synthetic::{synthetic_corpus, SyntheticConfig};
use claimdet::model::{fit, TrainConfig};
use claimdet::semantic::{SemanticSource, SEMANTIC_DIM};

fn main() -> claimdet::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let records = synthetic_corpus(&SyntheticConfig {
        seed,
        ..Default::default()
    });
    let cfg = TrainConfig {
        seed,
        fallback_embeddings: true,
        ..Default::default()
    };
    let start = std::time::Instant::now();
    let out = fit(&records, &SemanticSource::fallback(SEMANTIC_DIM), &cfg)?;
    println!("parameters: {}", out.model.param_count());
    for p in &out.pretrain.pillars {
        println!("pre-train {:<16} records {:>3} losses {:?}", p.pillar, p.records, p.losses);
    }
    for e in &out.train.history {
        println!(
            "epoch {:>2}  loss {:.4}  val m-F1 {:.3}  c-F1 {:.3}",
            e.epoch, e.loss, e.val_m_f1, e.val_c_f1
        );
    }
    if let Some(t) = &out.test {
        println!("test m-F1 {:.3}  c-F1 {:.3}", t.m_f1, t.c_f1);
    }
    println!("elapsed {:.1}s", start.elapsed().as_secs_f64());
    Ok(())
}
