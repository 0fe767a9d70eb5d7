//! Compares the analytic gradients of the full model with finite differences
//! on a two-record batch, dropout included.
//!
//! ```sh
//! cargo run --release --example gradient_check -- [seed]
//! ```

use claimdet::corpus::synthetic::{synthetic_corpus, SyntheticConfig};
use claimdet::model::{build_vocabularies, prepare_example, Model, ModelConfig, Network, PillarTables};
use claimdet::nn::{gradient_check, GradCheckConfig, Rng};
use claimdet::semantic::{SemanticSource, SEMANTIC_DIM};

fn main() -> claimdet::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let records = synthetic_corpus(&SyntheticConfig {
        records: 60,
        seed,
        ..Default::default()
    });
    let cfg = ModelConfig::default();
    let mut model = Model::build(&cfg, build_vocabularies(&records, cfg.k)?, PillarTables::default(), seed)?;
    let semantic = SemanticSource::fallback(SEMANTIC_DIM);
    let batch = records[..2]
        .iter()
        .map(|r| prepare_example(r, &model.vocab, &semantic))
        .collect::<claimdet::Result<Vec<_>>>()?;
    let network = &model.network;
    let report = gradient_check(
        &mut model.store,
        |store, backward| {
            let mut dropout = Rng::new(seed + 1000);
            let mut total = 0.0;
            for ex in &batch {
                let label = ex.label.unwrap_or(0);
                let pass = network.forward(store, ex, Some(&mut dropout), None)?;
                total += Network::loss(&pass, label, 0.3)?;
                if backward {
                    network.backward(store, &pass, label, 0.3);
                }
            }
            Ok(total)
        },
        &mut Rng::new(seed),
        &GradCheckConfig::default(),
    )?;
    println!(
        "{} coordinates checked, worst relative error {:.2e} in {}",
        report.coords_checked, report.max_rel_error, report.worst_param
    );
    Ok(())
}
