//! Encodes one parsed sentence for the dependency pillar and shows how the
//! positional mode changes the transformer's attention.
//!
//! ```sh
//! cargo run --example dependency_view
//! ```

use claimdet::corpus::synthetic::{synthetic_corpus, SyntheticConfig};
use claimdet::dep::{dep_trigrams, DepPillar, DepPillarConfig, DepSeq, PositionalMode, DEP_K};
use claimdet::nn::{ParamStore, Rng};
use claimdet::pos::NgramVocab;

fn main() -> claimdet::Result<()> {
    let records = synthetic_corpus(&SyntheticConfig::default());
    let vocab = NgramVocab::build(records.iter().map(|r| r.deprel.as_slice()), DEP_K)?;
    let r = &records[0];
    println!("{}", r.text);
    for (i, ((tok, rel), gram)) in r.tokens.iter().zip(&r.deprel).zip(dep_trigrams(&r.deprel)?).enumerate() {
        println!("{:>2} {:<10} {:<8} head {:>2}  {}", i + 1, tok, rel, r.head[i], gram.join(" "));
    }
    let seq = DepSeq::from_record(r, &vocab)?;
    for mode in [PositionalMode::Sinusoidal, PositionalMode::Learned, PositionalMode::Off] {
        let mut store = ParamStore::new();
        let cfg = DepPillarConfig {
            positional: mode,
            ..Default::default()
        };
        let pillar = DepPillar::new(&mut store, "dep", vocab.len(), &cfg, None, None, &mut Rng::new(1))?;
        let (out, cache) = pillar.forward(&store, &seq)?;
        let first: Vec<String> = cache.transformer().attention_rows().next().unwrap_or(&[]).iter().map(|w| format!("{w:.2}")).collect();
        println!("{mode:?}: output norm {:.3}, first attention row [{}]", out.iter().map(|x| x * x).sum::<f64>().sqrt(), first.join(" "));
    }
    Ok(())
}
