use crate::error::{Error, Result};
use crate::nn::ops::{axpy, dot, softmax_backward, softmax_unchecked};
use crate::nn::{Dense, ParamId, ParamStore, Rng};

/// Additive attention pooling: `score_i = u . tanh(W x_i + b)`, weights are a
/// softmax over the unmasked positions, and the pooled vector is `sum_i w_i x_i`.
///
/// The score vector `u` starts at zero, so an untrained pool is uniform.
#[derive(Clone, Debug)]
pub struct AdditiveAttention {
    pub proj: Dense,
    pub score: ParamId,
    dim: usize,
}

#[derive(Clone, Debug)]
pub struct AttentionCache {
    active: Vec<usize>,
    hidden: Vec<Vec<f64>>,
    /// One weight per input position; masked positions hold exactly 0.
    pub weights: Vec<f64>,
}

impl AdditiveAttention {
    pub fn new(store: &mut ParamStore, name: &str, dim: usize, hidden: usize, rng: &mut Rng) -> Result<Self> {
        let proj = Dense::new(store, &format!("{name}.proj"), dim, hidden, rng)?;
        let score = store.add_const(format!("{name}.score"), &[hidden], 0.0)?;
        Ok(AdditiveAttention { proj, score, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `keep[i]` marks position `i` as a real (unmasked) entry.
    pub fn forward(
        &self,
        store: &ParamStore,
        xs: &[Vec<f64>],
        keep: &[bool],
    ) -> Result<(Vec<f64>, AttentionCache)> {
        if xs.len() != keep.len() {
            return Err(Error::Shape(format!(
                "{} vectors but {} mask entries",
                xs.len(),
                keep.len()
            )));
        }
        let active: Vec<usize> = (0..xs.len()).filter(|&i| keep[i]).collect();
        if active.is_empty() {
            return Err(Error::InvalidArgument("attention over fully masked input".into()));
        }
        let u = store.value(self.score).data();
        let mut hidden = Vec::with_capacity(active.len());
        let mut scores = Vec::with_capacity(active.len());
        for &i in &active {
            if xs[i].len() != self.dim {
                return Err(Error::Shape(format!(
                    "attention input dim {} != {}",
                    xs[i].len(),
                    self.dim
                )));
            }
            let h: Vec<f64> = self.proj.forward(store, &xs[i]).iter().map(|z| z.tanh()).collect();
            scores.push(dot(u, &h));
            hidden.push(h);
        }
        let probs = softmax_unchecked(&scores);
        let mut weights = vec![0.0; xs.len()];
        let mut pooled = vec![0.0; self.dim];
        for (k, &i) in active.iter().enumerate() {
            weights[i] = probs[k];
            axpy(probs[k], &xs[i], &mut pooled);
        }
        Ok((
            pooled,
            AttentionCache {
                active,
                hidden,
                weights,
            },
        ))
    }

    pub fn backward(
        &self,
        store: &mut ParamStore,
        xs: &[Vec<f64>],
        cache: &AttentionCache,
        dpooled: &[f64],
    ) -> Vec<Vec<f64>> {
        let mut dxs = vec![vec![0.0; self.dim]; xs.len()];
        let probs: Vec<f64> = cache.active.iter().map(|&i| cache.weights[i]).collect();
        let dprobs: Vec<f64> = cache.active.iter().map(|&i| dot(&xs[i], dpooled)).collect();
        let dscores = softmax_backward(&probs, &dprobs);
        let u = store.value(self.score).data().to_vec();
        let mut du = vec![0.0; u.len()];
        for (k, &i) in cache.active.iter().enumerate() {
            axpy(probs[k], dpooled, &mut dxs[i]);
            let h = &cache.hidden[k];
            axpy(dscores[k], h, &mut du);
            let dz: Vec<f64> = h
                .iter()
                .zip(&u)
                .map(|(h, u)| dscores[k] * u * (1.0 - h * h))
                .collect();
            let dx = self.proj.backward(store, &xs[i], &dz);
            axpy(1.0, &dx, &mut dxs[i]);
        }
        store.accumulate(self.score, &du);
        dxs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(dim: usize) -> (ParamStore, AdditiveAttention) {
        let mut store = ParamStore::new();
        let mut rng = Rng::new(5);
        let att = AdditiveAttention::new(&mut store, "att", dim, 4, &mut rng).unwrap();
        (store, att)
    }

    #[test]
    fn single_vector_gets_full_weight() {
        let (store, att) = setup(3);
        let v = vec![0.1, -2.0, 3.5];
        let (pooled, cache) = att.forward(&store, std::slice::from_ref(&v), &[true]).unwrap();
        assert_eq!(cache.weights, vec![1.0]);
        assert_eq!(pooled, v);
    }

    #[test]
    fn untrained_scorer_is_uniform() {
        let (store, att) = setup(2);
        let xs = vec![vec![1.0, 0.0], vec![0.0, 3.0], vec![2.0, 3.0]];
        let (pooled, cache) = att.forward(&store, &xs, &[true; 3]).unwrap();
        for w in &cache.weights {
            assert!((w - 1.0 / 3.0).abs() < 1e-15);
        }
        assert!((pooled[0] - 1.0).abs() < 1e-12);
        assert!((pooled[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn masked_position_gets_zero_weight() {
        let (mut store, att) = setup(2);
        let mut rng = Rng::new(9);
        store.randomize(1.0, &mut rng);
        let xs = vec![vec![1.0, 0.5], vec![-0.3, 3.0], vec![2.0, 3.0]];
        let (_, cache) = att.forward(&store, &xs, &[true, false, true]).unwrap();
        assert_eq!(cache.weights[1], 0.0);
        assert!((cache.weights[0] + cache.weights[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn all_masked_is_error() {
        let (store, att) = setup(2);
        let xs = vec![vec![1.0, 0.5]];
        assert!(att.forward(&store, &xs, &[false]).is_err());
    }
}
