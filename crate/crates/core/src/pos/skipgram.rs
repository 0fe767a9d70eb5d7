//! Skip-gram with negative sampling over k-gram index sequences.

use rand::distributions::{Distribution, WeightedIndex};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::ops::{dot, sigmoid};
use crate::nn::{Rng, Tensor};
use crate::pos::UNK_INDEX;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkipGramConfig {
    /// Maximum distance between a centre and a context position.
    pub window: usize,
    pub dim: usize,
    pub epochs: usize,
    pub negatives: usize,
    /// Initial learning rate, decayed linearly to `min_lr` over training.
    pub lr: f64,
    pub min_lr: f64,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        SkipGramConfig {
            window: 6,
            dim: 20,
            epochs: 5,
            negatives: 5,
            lr: 0.025,
            min_lr: 1e-4,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SkipGramModel {
    /// `vocab_size x dim` input vectors; this is the embedding that gets used downstream.
    pub embeddings: Tensor,
    /// Mean negative-sampling loss per epoch.
    pub epoch_losses: Vec<f64>,
}

/// `(centre, context)` pairs within `window` positions, in sequence order.
pub fn skipgram_pairs(seq: &[usize], window: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for (i, &c) in seq.iter().enumerate() {
        let lo = i.saturating_sub(window);
        let hi = (i + window).min(seq.len() - 1);
        for (j, &o) in seq.iter().enumerate().take(hi + 1).skip(lo) {
            if j != i {
                pairs.push((c, o));
            }
        }
    }
    pairs
}

/// Trains input/output vectors with the unigram^0.75 noise distribution.
/// Pairs involving the unknown index are skipped and its row is left untouched.
pub fn train_skipgram(sequences: &[Vec<usize>], vocab_size: usize, cfg: &SkipGramConfig, rng: &mut Rng) -> Result<SkipGramModel> {
    let mut counts = vec![0u64; vocab_size];
    for &i in sequences.iter().flatten() {
        if i >= vocab_size {
            return Err(Error::InvalidArgument(format!("index {i} outside vocabulary of {vocab_size}")));
        }
        counts[i] += 1;
    }
    counts[UNK_INDEX] = 0;
    let trainable = counts.iter().filter(|&&c| c > 0).count();
    if trainable < cfg.negatives + 1 {
        return Err(Error::InsufficientData(format!(
            "skip-gram needs at least {} distinct k-grams, found {trainable}",
            cfg.negatives + 1
        )));
    }
    let noise = WeightedIndex::new(counts.iter().map(|&c| (c as f64).powf(0.75)))
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;

    let dim = cfg.dim;
    let init = 0.5 / dim as f64;
    let mut input: Vec<f64> = (0..vocab_size * dim).map(|_| rng.uniform(-init, init)).collect();
    let mut output = vec![0.0; vocab_size * dim];

    let pairs: Vec<(usize, usize)> = sequences
        .iter()
        .flat_map(|s| skipgram_pairs(s, cfg.window))
        .filter(|&(c, o)| c != UNK_INDEX && o != UNK_INDEX)
        .collect();
    let total = (pairs.len() * cfg.epochs).max(1) as f64;
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut seen = 0usize;
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut grad_in = vec![0.0; dim];
    for _ in 0..cfg.epochs {
        rng.shuffle(&mut order);
        let mut loss = 0.0;
        for &p in &order {
            let (centre, context) = pairs[p];
            let lr = (cfg.lr * (1.0 - seen as f64 / total)).max(cfg.min_lr);
            seen += 1;
            grad_in.iter_mut().for_each(|g| *g = 0.0);
            let vc = centre * dim..(centre + 1) * dim;
            let mut targets = Vec::with_capacity(cfg.negatives + 1);
            targets.push((context, 1.0));
            while targets.len() < cfg.negatives + 1 {
                let n = noise.sample(rng.inner());
                if n != context {
                    targets.push((n, 0.0));
                }
            }
            for (t, label) in targets {
                let vt = t * dim..(t + 1) * dim;
                let score = sigmoid(dot(&input[vc.clone()], &output[vt.clone()]));
                loss -= if label > 0.0 { score.max(1e-12).ln() } else { (1.0 - score).max(1e-12).ln() };
                let g = lr * (label - score);
                for k in 0..dim {
                    grad_in[k] += g * output[vt.start + k];
                    output[vt.start + k] += g * input[vc.start + k];
                }
            }
            for k in 0..dim {
                input[vc.start + k] += grad_in[k];
            }
        }
        epoch_losses.push(if pairs.is_empty() { 0.0 } else { loss / pairs.len() as f64 });
    }
    Ok(SkipGramModel {
        embeddings: Tensor::from_vec(&[vocab_size, dim], input)?,
        epoch_losses,
    })
}
