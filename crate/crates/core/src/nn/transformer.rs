use crate::error::{Error, Result};
use crate::nn::ops::{axpy, dot, relu, relu_backward, softmax_backward, softmax_unchecked};
use crate::nn::{Dense, ParamId, ParamStore, Rng};

pub const LAYER_NORM_EPS: f64 = 1e-5;

#[derive(Clone, Debug)]
pub struct LayerNorm {
    pub gamma: ParamId,
    pub beta: ParamId,
    dim: usize,
}

#[derive(Clone, Debug)]
struct NormCache {
    xhat: Vec<f64>,
    inv_std: f64,
}

impl LayerNorm {
    pub fn new(store: &mut ParamStore, name: &str, dim: usize) -> Result<Self> {
        let gamma = store.add_const(format!("{name}.gamma"), &[dim], 1.0)?;
        let beta = store.add_const(format!("{name}.beta"), &[dim], 0.0)?;
        Ok(LayerNorm { gamma, beta, dim })
    }

    fn forward(&self, store: &ParamStore, x: &[f64]) -> (Vec<f64>, NormCache) {
        let n = self.dim as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let inv_std = 1.0 / (var + LAYER_NORM_EPS).sqrt();
        let xhat: Vec<f64> = x.iter().map(|v| (v - mean) * inv_std).collect();
        let g = store.value(self.gamma).data();
        let b = store.value(self.beta).data();
        let y = (0..self.dim).map(|i| g[i] * xhat[i] + b[i]).collect();
        (y, NormCache { xhat, inv_std })
    }

    fn backward(&self, store: &mut ParamStore, cache: &NormCache, dy: &[f64]) -> Vec<f64> {
        let n = self.dim as f64;
        let dxhat: Vec<f64> = {
            let g = store.value(self.gamma).data();
            dy.iter().zip(g).map(|(d, g)| d * g).collect()
        };
        let gg: Vec<f64> = dy.iter().zip(&cache.xhat).map(|(d, x)| d * x).collect();
        store.accumulate(self.gamma, &gg);
        store.accumulate(self.beta, dy);
        let sum_d: f64 = dxhat.iter().sum();
        let sum_dx: f64 = dxhat.iter().zip(&cache.xhat).map(|(d, x)| d * x).sum();
        dxhat
            .iter()
            .zip(&cache.xhat)
            .map(|(d, x)| cache.inv_std / n * (n * d - sum_d - x * sum_dx))
            .collect()
    }
}

/// Post-norm transformer encoder block: multi-head self-attention, residual,
/// layer norm, ReLU feed-forward, residual, layer norm.
///
/// Masked positions are dropped before attention (they neither attend nor are
/// attended to) and come back as zero rows.
#[derive(Clone, Debug)]
pub struct TransformerBlock {
    pub query: Dense,
    pub key: Dense,
    pub value: Dense,
    pub out: Dense,
    pub norm1: LayerNorm,
    pub ff1: Dense,
    pub ff2: Dense,
    pub norm2: LayerNorm,
    dim: usize,
    heads: usize,
}

#[derive(Clone, Debug)]
pub struct TransformerCache {
    active: Vec<usize>,
    len: usize,
    x: Vec<Vec<f64>>,
    q: Vec<Vec<f64>>,
    k: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    /// `attn[head][i]` is the attention distribution of query `i` over keys.
    attn: Vec<Vec<Vec<f64>>>,
    z: Vec<Vec<f64>>,
    norm1: Vec<NormCache>,
    y1: Vec<Vec<f64>>,
    pre_ff: Vec<Vec<f64>>,
    hid: Vec<Vec<f64>>,
    norm2: Vec<NormCache>,
}

impl TransformerCache {
    /// Every per-query attention distribution, for all heads.
    pub fn attention_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.attn.iter().flatten().map(|r| r.as_slice())
    }
}

impl TransformerBlock {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        dim: usize,
        heads: usize,
        ff_dim: usize,
        rng: &mut Rng,
    ) -> Result<Self> {
        if heads == 0 || !dim.is_multiple_of(heads) {
            return Err(Error::InvalidArgument(format!(
                "model dim {dim} not divisible by {heads} heads"
            )));
        }
        Ok(TransformerBlock {
            query: Dense::new(store, &format!("{name}.q"), dim, dim, rng)?,
            key: Dense::new(store, &format!("{name}.k"), dim, dim, rng)?,
            value: Dense::new(store, &format!("{name}.v"), dim, dim, rng)?,
            out: Dense::new(store, &format!("{name}.o"), dim, dim, rng)?,
            norm1: LayerNorm::new(store, &format!("{name}.ln1"), dim)?,
            ff1: Dense::new(store, &format!("{name}.ff1"), dim, ff_dim, rng)?,
            ff2: Dense::new(store, &format!("{name}.ff2"), ff_dim, dim, rng)?,
            norm2: LayerNorm::new(store, &format!("{name}.ln2"), dim)?,
            dim,
            heads,
        })
    }

    pub fn head_dim(&self) -> usize {
        self.dim / self.heads
    }

    pub fn forward(&self, store: &ParamStore, xs: &[Vec<f64>], keep: &[bool]) -> Result<(Vec<Vec<f64>>, TransformerCache)> {
        if xs.len() != keep.len() {
            return Err(Error::Shape("transformer mask length differs from sequence".into()));
        }
        if let Some(x) = xs.iter().find(|x| x.len() != self.dim) {
            return Err(Error::Shape(format!("transformer input dim {} != {}", x.len(), self.dim)));
        }
        let active: Vec<usize> = (0..xs.len()).filter(|&i| keep[i]).collect();
        let x: Vec<Vec<f64>> = active.iter().map(|&i| xs[i].clone()).collect();
        let m = x.len();
        let dh = self.head_dim();
        let scale = 1.0 / (dh as f64).sqrt();

        let q: Vec<Vec<f64>> = x.iter().map(|r| self.query.forward(store, r)).collect();
        let k: Vec<Vec<f64>> = x.iter().map(|r| self.key.forward(store, r)).collect();
        let v: Vec<Vec<f64>> = x.iter().map(|r| self.value.forward(store, r)).collect();

        let mut attn = vec![Vec::with_capacity(m); self.heads];
        let mut z = vec![vec![0.0; self.dim]; m];
        for (h, head_attn) in attn.iter_mut().enumerate() {
            let span = h * dh..(h + 1) * dh;
            for i in 0..m {
                let scores: Vec<f64> = (0..m)
                    .map(|j| dot(&q[i][span.clone()], &k[j][span.clone()]) * scale)
                    .collect();
                let a = softmax_unchecked(&scores);
                for j in 0..m {
                    axpy(a[j], &v[j][span.clone()], &mut z[i][span.clone()]);
                }
                head_attn.push(a);
            }
        }

        let mut norm1 = Vec::with_capacity(m);
        let mut y1 = Vec::with_capacity(m);
        let mut pre_ff = Vec::with_capacity(m);
        let mut hid = Vec::with_capacity(m);
        let mut norm2 = Vec::with_capacity(m);
        let mut out = vec![vec![0.0; self.dim]; xs.len()];
        for i in 0..m {
            let mut r1 = self.out.forward(store, &z[i]);
            axpy(1.0, &x[i], &mut r1);
            let (a, c1) = self.norm1.forward(store, &r1);
            let pre = self.ff1.forward(store, &a);
            let h = relu(&pre);
            let mut r2 = self.ff2.forward(store, &h);
            axpy(1.0, &a, &mut r2);
            let (y, c2) = self.norm2.forward(store, &r2);
            out[active[i]] = y;
            norm1.push(c1);
            y1.push(a);
            pre_ff.push(pre);
            hid.push(h);
            norm2.push(c2);
        }
        Ok((
            out,
            TransformerCache {
                active,
                len: xs.len(),
                x,
                q,
                k,
                v,
                attn,
                z,
                norm1,
                y1,
                pre_ff,
                hid,
                norm2,
            },
        ))
    }

    pub fn backward(&self, store: &mut ParamStore, cache: &TransformerCache, douts: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let m = cache.active.len();
        let dh = self.head_dim();
        let scale = 1.0 / (dh as f64).sqrt();

        let mut dx = vec![vec![0.0; self.dim]; m];
        let mut dz = vec![vec![0.0; self.dim]; m];
        for i in 0..m {
            let dr2 = self.norm2.backward(store, &cache.norm2[i], &douts[cache.active[i]]);
            let dhid = self.ff2.backward(store, &cache.hid[i], &dr2);
            let dpre = relu_backward(&cache.pre_ff[i], &dhid);
            let mut dy1 = self.ff1.backward(store, &cache.y1[i], &dpre);
            axpy(1.0, &dr2, &mut dy1);
            let dr1 = self.norm1.backward(store, &cache.norm1[i], &dy1);
            dz[i] = self.out.backward(store, &cache.z[i], &dr1);
            dx[i] = dr1;
        }

        let mut dq = vec![vec![0.0; self.dim]; m];
        let mut dk = vec![vec![0.0; self.dim]; m];
        let mut dv = vec![vec![0.0; self.dim]; m];
        for h in 0..self.heads {
            let span = h * dh..(h + 1) * dh;
            for i in 0..m {
                let a = &cache.attn[h][i];
                let dzi = &dz[i][span.clone()];
                let da: Vec<f64> = (0..m).map(|j| dot(dzi, &cache.v[j][span.clone()])).collect();
                for j in 0..m {
                    axpy(a[j], dzi, &mut dv[j][span.clone()]);
                }
                let ds = softmax_backward(a, &da);
                for j in 0..m {
                    let s = ds[j] * scale;
                    if s == 0.0 {
                        continue;
                    }
                    axpy(s, &cache.k[j][span.clone()], &mut dq[i][span.clone()]);
                    axpy(s, &cache.q[i][span.clone()], &mut dk[j][span.clone()]);
                }
            }
        }

        for i in 0..m {
            let gq = self.query.backward(store, &cache.x[i], &dq[i]);
            let gk = self.key.backward(store, &cache.x[i], &dk[i]);
            let gv = self.value.backward(store, &cache.x[i], &dv[i]);
            axpy(1.0, &gq, &mut dx[i]);
            axpy(1.0, &gk, &mut dx[i]);
            axpy(1.0, &gv, &mut dx[i]);
        }

        let mut full = vec![vec![0.0; self.dim]; cache.len];
        for (i, &pos) in cache.active.iter().enumerate() {
            full[pos] = std::mem::take(&mut dx[i]);
        }
        full
    }
}
