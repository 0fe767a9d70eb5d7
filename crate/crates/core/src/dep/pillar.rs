use serde::{Deserialize, Serialize};

use crate::corpus::{Record, Viewpoint};
use crate::dep::{position_signal, DepSeq, PositionalMode, SIGNAL_DIM};
use crate::error::{Error, Result};
use crate::fusion::{Fusion, FusionOutput};
use crate::nn::ops::{relu, relu_backward};
use crate::nn::{Dense, Embedding, ParamId, ParamStore, Rng, Tensor, TransformerBlock, TransformerCache};
use crate::pos::{NgramVocab, MAX_SEQ_LEN};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepPillarConfig {
    pub embed_dim: usize,
    pub heads: usize,
    pub ff_dim: usize,
    pub hidden: usize,
    pub out_dim: usize,
    pub max_len: usize,
    pub positional: PositionalMode,
}

impl Default for DepPillarConfig {
    fn default() -> Self {
        DepPillarConfig {
            embed_dim: 2 * SIGNAL_DIM,
            heads: 5,
            ff_dim: 128,
            hidden: 64,
            out_dim: 32,
            max_len: MAX_SEQ_LEN,
            positional: PositionalMode::Sinusoidal,
        }
    }
}

/// Tri-gram embedding plus position signals → transformer block → masked
/// mean pool → dense (ReLU) → dense.
#[derive(Clone, Debug)]
pub struct DepPillar {
    pub viewpoint: Option<Viewpoint>,
    pub embedding: Embedding,
    pub transformer: TransformerBlock,
    pub hidden: Dense,
    pub proj: Dense,
    positional: PositionalMode,
    /// `(max_len + 1) x SIGNAL_DIM` tables for token and parent positions in learned mode.
    learned: Option<(ParamId, ParamId)>,
    max_len: usize,
}

#[derive(Clone, Debug)]
pub struct DepPillarCache {
    seq: DepSeq,
    keep: Vec<bool>,
    transformer: TransformerCache,
    states: Vec<Vec<f64>>,
    pooled: Vec<f64>,
    hidden_pre: Vec<f64>,
    hidden: Vec<f64>,
}

impl DepPillarCache {
    /// Transformer outputs before pooling, one per position.
    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn transformer(&self) -> &TransformerCache {
        &self.transformer
    }
}

fn signal_table(rows: usize) -> Tensor {
    let data = (0..rows).flat_map(|i| position_signal(i, SIGNAL_DIM)).collect();
    Tensor::from_vec(&[rows, SIGNAL_DIM], data).expect("positive table shape")
}

impl DepPillar {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        vocab_len: usize,
        cfg: &DepPillarConfig,
        table: Option<Tensor>,
        viewpoint: Option<Viewpoint>,
        rng: &mut Rng,
    ) -> Result<Self> {
        if cfg.embed_dim != 2 * SIGNAL_DIM {
            return Err(Error::Shape(format!(
                "dependency embedding dim {} must equal two {SIGNAL_DIM}-dim position signals",
                cfg.embed_dim
            )));
        }
        let table = match table {
            Some(t) if t.shape() == [vocab_len, cfg.embed_dim] => t,
            Some(t) => {
                return Err(Error::Shape(format!(
                    "dependency embedding {:?} != [{vocab_len}, {}]",
                    t.shape(),
                    cfg.embed_dim
                )))
            }
            None => {
                let data = (0..vocab_len * cfg.embed_dim).map(|_| rng.uniform(-0.1, 0.1)).collect();
                Tensor::from_vec(&[vocab_len, cfg.embed_dim], data)?
            }
        };
        let embedding = Embedding::new(store, &format!("{name}.emb"), table)?;
        let learned = match cfg.positional {
            PositionalMode::Learned => Some((
                store.add(format!("{name}.pos_tok"), signal_table(cfg.max_len + 1))?,
                store.add(format!("{name}.pos_par"), signal_table(cfg.max_len + 1))?,
            )),
            _ => None,
        };
        let transformer = TransformerBlock::new(store, &format!("{name}.enc"), cfg.embed_dim, cfg.heads, cfg.ff_dim, rng)?;
        let hidden = Dense::new(store, &format!("{name}.hidden"), cfg.embed_dim, cfg.hidden, rng)?;
        let proj = Dense::new(store, &format!("{name}.proj"), cfg.hidden, cfg.out_dim, rng)?;
        Ok(DepPillar {
            viewpoint,
            embedding,
            transformer,
            hidden,
            proj,
            positional: cfg.positional,
            learned,
            max_len: cfg.max_len,
        })
    }

    pub fn out_dim(&self) -> usize {
        self.proj.output_dim()
    }

    pub fn positional(&self) -> PositionalMode {
        self.positional
    }

    fn signal_row(&self, store: &ParamStore, table: Option<ParamId>, index: usize) -> Vec<f64> {
        match (self.positional, table) {
            (PositionalMode::Off, _) => vec![0.0; SIGNAL_DIM],
            (PositionalMode::Learned, Some(t)) => store.value(t).row(index.min(self.max_len)).to_vec(),
            _ => position_signal(index, SIGNAL_DIM),
        }
    }

    /// Per-position input to the transformer: tri-gram embedding plus the
    /// concatenated token-position and parent-position signals.
    pub fn encode(&self, store: &ParamStore, seq: &DepSeq) -> Result<Vec<Vec<f64>>> {
        let mut xs = self.embedding.forward(store, &seq.trigrams)?;
        if self.positional == PositionalMode::Off {
            return Ok(xs);
        }
        let (tok, par) = match self.learned {
            Some((t, p)) => (Some(t), Some(p)),
            None => (None, None),
        };
        for (j, x) in xs.iter_mut().enumerate() {
            let ps = self.signal_row(store, tok, seq.positions[j]);
            let pp = self.signal_row(store, par, seq.parents[j]);
            for (xv, s) in x.iter_mut().zip(ps.iter().chain(&pp)) {
                *xv += s;
            }
        }
        Ok(xs)
    }

    pub fn forward(&self, store: &ParamStore, seq: &DepSeq) -> Result<(Vec<f64>, DepPillarCache)> {
        let seq = seq.truncated(self.max_len);
        let keep = vec![true; seq.len()];
        self.forward_masked(store, seq, keep)
    }

    /// Like [`forward`](Self::forward) but positions with `keep[j] == false`
    /// are treated as padding: they neither attend, are attended to, nor enter the pool.
    pub fn forward_masked(&self, store: &ParamStore, seq: DepSeq, keep: Vec<bool>) -> Result<(Vec<f64>, DepPillarCache)> {
        if keep.len() != seq.len() {
            return Err(Error::Shape(format!("mask of {} for {} positions", keep.len(), seq.len())));
        }
        let live = keep.iter().filter(|&&k| k).count();
        if live == 0 {
            return Err(Error::InvalidArgument("dependency pillar input has no unmasked positions".into()));
        }
        let xs = self.encode(store, &seq)?;
        let (states, transformer) = self.transformer.forward(store, &xs, &keep)?;
        let mut pooled = vec![0.0; self.embedding.dim()];
        for (s, _) in states.iter().zip(&keep).filter(|(_, &k)| k) {
            for (p, v) in pooled.iter_mut().zip(s) {
                *p += v;
            }
        }
        pooled.iter_mut().for_each(|p| *p /= live as f64);
        let hidden_pre = self.hidden.forward(store, &pooled);
        let hidden = relu(&hidden_pre);
        let out = self.proj.forward(store, &hidden);
        Ok((
            out,
            DepPillarCache {
                seq,
                keep,
                transformer,
                states,
                pooled,
                hidden_pre,
                hidden,
            },
        ))
    }

    pub fn backward(&self, store: &mut ParamStore, cache: &DepPillarCache, dout: &[f64]) {
        let dhidden = self.proj.backward(store, &cache.hidden, dout);
        let dpre = relu_backward(&cache.hidden_pre, &dhidden);
        let dpooled = self.hidden.backward(store, &cache.pooled, &dpre);
        let live = cache.keep.iter().filter(|&&k| k).count() as f64;
        let dstates: Vec<Vec<f64>> = cache
            .keep
            .iter()
            .map(|&k| {
                if k {
                    dpooled.iter().map(|d| d / live).collect()
                } else {
                    vec![0.0; dpooled.len()]
                }
            })
            .collect();
        let dxs = self.transformer.backward(store, &cache.transformer, &dstates);
        self.embedding.backward(store, &cache.seq.trigrams, &dxs);
        if let Some((tok, par)) = self.learned {
            for (j, dx) in dxs.iter().enumerate() {
                let (a, b) = dx.split_at(SIGNAL_DIM);
                let ti = cache.seq.positions[j].min(self.max_len);
                let pi = cache.seq.parents[j].min(self.max_len);
                store.grad_mut(tok)[ti * SIGNAL_DIM..(ti + 1) * SIGNAL_DIM]
                    .iter_mut()
                    .zip(a)
                    .for_each(|(g, d)| *g += d);
                store.grad_mut(par)[pi * SIGNAL_DIM..(pi + 1) * SIGNAL_DIM]
                    .iter_mut()
                    .zip(b)
                    .for_each(|(g, d)| *g += d);
            }
        }
    }
}

/// Builds the record's dependency sequence with `vocab` and runs `pillar` on it.
pub fn dep_pillar_forward(store: &ParamStore, record: &Record, vocab: &NgramVocab, pillar: &DepPillar) -> Result<Vec<f64>> {
    let seq = DepSeq::from_record(record, vocab)?;
    Ok(pillar.forward(store, &seq)?.0)
}

/// Attention fusion of the three dependency pillar outputs.
pub fn dep_view_fuse(store: &ParamStore, fusion: &Fusion, noisy: &[f64], semi: &[f64], non: &[f64]) -> Result<FusionOutput> {
    fusion.forward(store, &[noisy.to_vec(), semi.to_vec(), non.to_vec()])
}
