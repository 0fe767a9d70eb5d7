use serde::{Deserialize, Serialize};

use crate::dep::{DepPillarConfig, PositionalMode, SIGNAL_DIM};
use crate::error::{Error, Result};
use crate::pos::{PosPillarConfig, SkipGramConfig, MAX_SEQ_LEN};
use crate::semantic::SEMANTIC_DIM;

/// Layer sizes and structural switches. Stored in checkpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// POS n-gram order.
    pub k: usize,
    pub embed_dim: usize,
    /// Width of every pillar output and of both fusion stages.
    pub fusion_dim: usize,
    pub lstm_hidden: usize,
    pub attn_hidden: usize,
    pub heads: usize,
    pub ff_dim: usize,
    pub dep_hidden: usize,
    pub semantic_dim: usize,
    pub semantic_hidden: usize,
    pub head_hidden: usize,
    pub head_hidden2: usize,
    pub max_len: usize,
    /// One shared pillar per linguistic branch instead of one per viewpoint.
    pub combined_view: bool,
    pub positional: PositionalMode,
    pub dropout: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            k: 3,
            embed_dim: 2 * SIGNAL_DIM,
            fusion_dim: 32,
            lstm_hidden: 32,
            attn_hidden: 32,
            heads: 5,
            ff_dim: 128,
            dep_hidden: 64,
            semantic_dim: SEMANTIC_DIM,
            semantic_hidden: SEMANTIC_DIM,
            head_hidden: 16,
            head_hidden2: 8,
            max_len: MAX_SEQ_LEN,
            combined_view: false,
            positional: PositionalMode::Sinusoidal,
            dropout: 0.3,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(2..=4).contains(&self.k) {
            return bad(format!("k = {} not in {{2,3,4}}", self.k));
        }
        if self.embed_dim != 2 * SIGNAL_DIM {
            return bad(format!("embed_dim must be {}", 2 * SIGNAL_DIM));
        }
        if self.heads == 0 || !self.embed_dim.is_multiple_of(self.heads) {
            return bad(format!("embed_dim {} not divisible by {} heads", self.embed_dim, self.heads));
        }
        let sizes = [
            self.fusion_dim,
            self.lstm_hidden,
            self.attn_hidden,
            self.ff_dim,
            self.dep_hidden,
            self.semantic_dim,
            self.semantic_hidden,
            self.head_hidden,
            self.head_hidden2,
            self.max_len,
        ];
        if sizes.contains(&0) {
            return bad("layer sizes must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} not in [0, 1)", self.dropout));
        }
        Ok(())
    }

    pub fn pillars_per_branch(&self) -> usize {
        if self.combined_view {
            1
        } else {
            3
        }
    }

    pub fn pos_pillar(&self) -> PosPillarConfig {
        PosPillarConfig {
            embed_dim: self.embed_dim,
            lstm_hidden: self.lstm_hidden,
            attn_hidden: self.attn_hidden,
            out_dim: self.fusion_dim,
            max_len: self.max_len,
        }
    }

    pub fn dep_pillar(&self) -> DepPillarConfig {
        DepPillarConfig {
            embed_dim: self.embed_dim,
            heads: self.heads,
            ff_dim: self.ff_dim,
            hidden: self.dep_hidden,
            out_dim: self.fusion_dim,
            max_len: self.max_len,
            positional: self.positional,
        }
    }
}

/// Optimisation settings for pre-training and joint training.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Weight of each auxiliary branch loss.
    pub aux_weight: f64,
    pub pretrain_epochs: usize,
    /// Hash-embed records that have no precomputed sentence vector.
    pub fallback_embeddings: bool,
    /// Epochs without a validation claim-F1 improvement before stopping.
    pub patience: usize,
    /// Initialise pillar embeddings from skip-gram vectors.
    pub skipgram_init: bool,
    pub skipgram: SkipGramConfig,
    pub model: ModelConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-3,
            epochs: 30,
            batch_size: 32,
            seed: 0,
            aux_weight: 0.3,
            pretrain_epochs: 3,
            fallback_embeddings: false,
            patience: 10,
            skipgram_init: true,
            skipgram: SkipGramConfig::default(),
            model: ModelConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.aux_weight < 0.0 || !self.aux_weight.is_finite() {
            return Err(Error::InvalidArgument(format!("aux weight {} must be >= 0", self.aux_weight)));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be >= 1".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidArgument(format!("learning rate {} must be positive", self.lr)));
        }
        self.model.validate()
    }
}
