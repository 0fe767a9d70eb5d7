use serde::{Deserialize, Serialize};

use crate::corpus::{Record, Viewpoint};
use crate::error::{Error, Result};
use crate::fusion::{Fusion, FusionOutput};
use crate::nn::{AdditiveAttention, AttentionCache, BiLstm, BiLstmCache, Dense, Embedding, ParamStore, Rng, Tensor};
use crate::pos::NgramVocab;

/// Sequences are cut to this many k-grams (tail dropped).
pub const MAX_SEQ_LEN: usize = 128;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosPillarConfig {
    pub embed_dim: usize,
    pub lstm_hidden: usize,
    pub attn_hidden: usize,
    pub out_dim: usize,
    pub max_len: usize,
}

impl Default for PosPillarConfig {
    fn default() -> Self {
        PosPillarConfig {
            embed_dim: 20,
            lstm_hidden: 32,
            attn_hidden: 32,
            out_dim: 32,
            max_len: MAX_SEQ_LEN,
        }
    }
}

/// k-gram embedding → BiLSTM → attention pool → linear projection.
#[derive(Clone, Debug)]
pub struct PosPillar {
    pub viewpoint: Option<Viewpoint>,
    pub embedding: Embedding,
    pub lstm: BiLstm,
    pub pool: AdditiveAttention,
    pub proj: Dense,
    max_len: usize,
}

#[derive(Clone, Debug)]
pub struct PosPillarCache {
    indices: Vec<usize>,
    xs: Vec<Vec<f64>>,
    lstm: BiLstmCache,
    hs: Vec<Vec<f64>>,
    pool: AttentionCache,
    pooled: Vec<f64>,
}

impl PosPillarCache {
    pub fn pool_weights(&self) -> &[f64] {
        &self.pool.weights
    }
}

impl PosPillar {
    /// `table` seeds the embedding (e.g. from skip-gram); otherwise rows are
    /// drawn uniformly in ±0.1.
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        vocab_len: usize,
        cfg: &PosPillarConfig,
        table: Option<Tensor>,
        viewpoint: Option<Viewpoint>,
        rng: &mut Rng,
    ) -> Result<Self> {
        let table = match table {
            Some(t) => {
                if t.shape() != [vocab_len, cfg.embed_dim] {
                    return Err(Error::Shape(format!(
                        "POS embedding {:?} != [{vocab_len}, {}]",
                        t.shape(),
                        cfg.embed_dim
                    )));
                }
                t
            }
            None => {
                let data = (0..vocab_len * cfg.embed_dim).map(|_| rng.uniform(-0.1, 0.1)).collect();
                Tensor::from_vec(&[vocab_len, cfg.embed_dim], data)?
            }
        };
        let embedding = Embedding::new(store, &format!("{name}.emb"), table)?;
        let lstm = BiLstm::new(store, &format!("{name}.lstm"), cfg.embed_dim, cfg.lstm_hidden, rng)?;
        let pool = AdditiveAttention::new(store, &format!("{name}.pool"), 2 * cfg.lstm_hidden, cfg.attn_hidden, rng)?;
        let proj = Dense::new(store, &format!("{name}.proj"), 2 * cfg.lstm_hidden, cfg.out_dim, rng)?;
        Ok(PosPillar {
            viewpoint,
            embedding,
            lstm,
            pool,
            proj,
            max_len: cfg.max_len,
        })
    }

    pub fn out_dim(&self) -> usize {
        self.proj.output_dim()
    }

    pub fn forward(&self, store: &ParamStore, indices: &[usize]) -> Result<(Vec<f64>, PosPillarCache)> {
        if indices.is_empty() {
            return Err(Error::InvalidArgument("POS pillar input is empty".into()));
        }
        let indices = indices[..indices.len().min(self.max_len)].to_vec();
        let xs = self.embedding.forward(store, &indices)?;
        let keep = vec![true; xs.len()];
        let (hs, lstm) = self.lstm.forward(store, &xs, &keep)?;
        let (pooled, pool) = self.pool.forward(store, &hs, &keep)?;
        let out = self.proj.forward(store, &pooled);
        Ok((
            out,
            PosPillarCache {
                indices,
                xs,
                lstm,
                hs,
                pool,
                pooled,
            },
        ))
    }

    pub fn backward(&self, store: &mut ParamStore, cache: &PosPillarCache, dout: &[f64]) {
        let dpooled = self.proj.backward(store, &cache.pooled, dout);
        let dhs = self.pool.backward(store, &cache.hs, &cache.pool, &dpooled);
        let dxs = self.lstm.backward(store, &cache.xs, &cache.lstm, &dhs);
        self.embedding.backward(store, &cache.indices, &dxs);
    }
}

/// Encodes a record's POS tags with `vocab` and runs `pillar` on them.
pub fn pos_pillar_forward(store: &ParamStore, record: &Record, vocab: &NgramVocab, pillar: &PosPillar) -> Result<Vec<f64>> {
    let indices = vocab.encode(&record.upos)?;
    Ok(pillar.forward(store, &indices)?.0)
}

/// Attention fusion of the noisy, semi-noisy and non-noisy pillar outputs.
pub fn pos_view_fuse(store: &ParamStore, fusion: &Fusion, noisy: &[f64], semi: &[f64], non: &[f64]) -> Result<FusionOutput> {
    fusion.forward(store, &[noisy.to_vec(), semi.to_vec(), non.to_vec()])
}
