//! The full classifier: six linguistic pillars, two view fusions, the
//! semantic head, branch fusion and the classification/auxiliary heads.

mod checkpoint;
mod config;
mod network;
mod pipeline;
mod train;

use serde::Serialize;

pub use config::{ModelConfig, TrainConfig};
pub use network::{prepare_example, AttentionReport, Branch, Example, ForwardPass, Network, PillarTables, Vocabularies};
pub use pipeline::{build_vocabularies, fit, fit_model, initial_model, skipgram_tables, FitOutput, TrainingSplits};
pub use train::{pretrain_pillars, train, EpochRecord, PillarPretrain, PretrainReport, TrainReport};

use crate::error::Result;
use crate::nn::ops::argmax;
use crate::nn::{ParamStore, Rng};

/// Layers, parameters, configuration and vocabularies of one model.
#[derive(Clone, Debug)]
pub struct Model {
    pub config: ModelConfig,
    pub vocab: Vocabularies,
    pub network: Network,
    pub store: ParamStore,
}

/// Inference output for one example.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Output {
    /// Predicted class: 1 claim, 0 non-claim.
    pub label: usize,
    pub probs: Vec<f64>,
    pub attention: AttentionReport,
}

impl Model {
    /// Initialises every parameter from `seed`.
    pub fn build(config: &ModelConfig, vocab: Vocabularies, tables: PillarTables, seed: u64) -> Result<Self> {
        let mut store = ParamStore::new();
        let mut rng = Rng::new(seed);
        let network = Network::build(&mut store, config, &vocab, tables, &mut rng)?;
        Ok(Model {
            config: config.clone(),
            vocab,
            network,
            store,
        })
    }

    pub fn param_count(&self) -> usize {
        self.store.num_scalars()
    }

    pub fn predict(&self, ex: &Example) -> Result<Output> {
        self.predict_with(ex, None)
    }

    /// Prediction with the branch attention optionally forced onto one branch.
    pub fn predict_with(&self, ex: &Example, forced: Option<Branch>) -> Result<Output> {
        let pass = self.network.forward(&self.store, ex, None, forced)?;
        Ok(Output {
            label: argmax(&pass.probs),
            probs: pass.probs,
            attention: pass.attention,
        })
    }

    /// Predicts `examples` on up to `threads` workers; output order matches input order.
    pub fn predict_many(&self, examples: &[Example], threads: usize) -> Result<Vec<Output>> {
        let threads = threads.max(1).min(examples.len().max(1));
        if threads == 1 {
            return examples.iter().map(|e| self.predict(e)).collect();
        }
        let chunk = examples.len().div_ceil(threads);
        let parts: Vec<Result<Vec<Output>>> = std::thread::scope(|s| {
            let handles: Vec<_> = examples
                .chunks(chunk)
                .map(|c| s.spawn(move || c.iter().map(|e| self.predict(e)).collect::<Result<Vec<_>>>()))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("prediction worker panicked"))
                .collect()
        });
        let mut out = Vec::with_capacity(examples.len());
        for p in parts {
            out.extend(p?);
        }
        Ok(out)
    }
}
