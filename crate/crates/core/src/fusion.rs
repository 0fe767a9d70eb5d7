//! Attention fusion over a fixed set of equally-sized branch vectors.

use crate::error::Result;
use crate::nn::{AdditiveAttention, AttentionCache, ParamStore, Rng};

#[derive(Clone, Debug)]
pub struct Fusion {
    pub attention: AdditiveAttention,
}

#[derive(Clone, Debug)]
pub struct FusionOutput {
    pub fused: Vec<f64>,
    pub weights: Vec<f64>,
    pub(crate) cache: AttentionCache,
}

impl Fusion {
    pub fn new(store: &mut ParamStore, name: &str, dim: usize, hidden: usize, rng: &mut Rng) -> Result<Self> {
        Ok(Fusion {
            attention: AdditiveAttention::new(store, name, dim, hidden, rng)?,
        })
    }

    /// Convex combination of `inputs` weighted by attention.
    pub fn forward(&self, store: &ParamStore, inputs: &[Vec<f64>]) -> Result<FusionOutput> {
        let keep = vec![true; inputs.len()];
        let (fused, cache) = self.attention.forward(store, inputs, &keep)?;
        Ok(FusionOutput {
            fused,
            weights: cache.weights.clone(),
            cache,
        })
    }

    pub fn backward(&self, store: &mut ParamStore, inputs: &[Vec<f64>], out: &FusionOutput, dfused: &[f64]) -> Vec<Vec<f64>> {
        self.attention.backward(store, inputs, &out.cache, dfused)
    }
}
