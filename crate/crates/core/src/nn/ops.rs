use crate::error::{Error, Result};
use crate::nn::Rng;

/// Lower clamp applied to the true-class probability in [`cross_entropy`].
pub const PROB_FLOOR: f64 = 1e-12;

/// Numerically stable softmax.
pub fn softmax(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::InvalidArgument("softmax of empty vector".into()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("softmax input is not finite".into()));
    }
    Ok(softmax_unchecked(v))
}

pub(crate) fn softmax_unchecked(v: &[f64]) -> Vec<f64> {
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = v.iter().map(|x| (x - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|x| *x /= sum);
    out
}

/// Gradient of a softmax with respect to its logits given the output
/// probabilities and the upstream gradient.
pub fn softmax_backward(probs: &[f64], dprobs: &[f64]) -> Vec<f64> {
    let dot: f64 = probs.iter().zip(dprobs).map(|(p, d)| p * d).sum();
    probs
        .iter()
        .zip(dprobs)
        .map(|(p, d)| p * (d - dot))
        .collect()
}

pub fn cross_entropy(probs: &[f64], label: usize) -> Result<f64> {
    let p = *probs.get(label).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "label {label} out of range for {} classes",
            probs.len()
        ))
    })?;
    Ok(-p.clamp(PROB_FLOOR, 1.0).ln())
}

/// Gradient of `cross_entropy(softmax(z), label)` with respect to `z`.
/// Zero when the clamp is active.
pub fn softmax_cross_entropy_grad(probs: &[f64], label: usize) -> Vec<f64> {
    if probs[label] <= PROB_FLOOR {
        return vec![0.0; probs.len()];
    }
    let mut g = probs.to_vec();
    g[label] -= 1.0;
    g
}

pub fn relu(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| v.max(0.0)).collect()
}

/// Backward through ReLU given its pre-activation input.
pub fn relu_backward(pre: &[f64], dy: &[f64]) -> Vec<f64> {
    pre.iter()
        .zip(dy)
        .map(|(&x, &d)| if x > 0.0 { d } else { 0.0 })
        .collect()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (y, x) in y.iter_mut().zip(x) {
        *y += alpha * x;
    }
}

pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Inverted dropout mask: each entry is 0 with probability `rate`, else `1/(1-rate)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DropoutMask(Vec<f64>);

impl DropoutMask {
    pub fn sample(len: usize, rate: f64, rng: &mut Rng) -> Self {
        if rate <= 0.0 {
            return Self::identity(len);
        }
        let keep = 1.0 / (1.0 - rate);
        DropoutMask(
            (0..len)
                .map(|_| if rng.bernoulli(rate) { 0.0 } else { keep })
                .collect(),
        )
    }

    pub fn identity(len: usize) -> Self {
        DropoutMask(vec![1.0; len])
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.0).map(|(x, m)| x * m).collect()
    }

    /// The mask is linear, so backward is the same elementwise product.
    pub fn backward(&self, dy: &[f64]) -> Vec<f64> {
        self.apply(dy)
    }
}
