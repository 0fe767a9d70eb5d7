use crate::error::Result;
use crate::nn::{ParamId, ParamStore, Rng};

/// Affine map `y = W x + b` with `W` stored `out x inp`.
#[derive(Clone, Debug)]
pub struct Dense {
    pub w: ParamId,
    pub b: ParamId,
    inp: usize,
    out: usize,
}

impl Dense {
    pub fn new(store: &mut ParamStore, name: &str, inp: usize, out: usize, rng: &mut Rng) -> Result<Self> {
        let w = store.add_glorot(format!("{name}.w"), out, inp, rng)?;
        let b = store.add_const(format!("{name}.b"), &[out], 0.0)?;
        Ok(Dense { w, b, inp, out })
    }

    pub fn input_dim(&self) -> usize {
        self.inp
    }

    pub fn output_dim(&self) -> usize {
        self.out
    }

    pub fn forward(&self, store: &ParamStore, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.inp);
        let w = store.value(self.w).data();
        let mut y = store.value(self.b).data().to_vec();
        for (o, yo) in y.iter_mut().enumerate() {
            let row = &w[o * self.inp..(o + 1) * self.inp];
            *yo += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
        y
    }

    /// Accumulates parameter gradients and returns `dL/dx`.
    pub fn backward(&self, store: &mut ParamStore, x: &[f64], dy: &[f64]) -> Vec<f64> {
        let mut dx = vec![0.0; self.inp];
        {
            let (w, gw) = store.value_and_grad(self.w);
            for (o, &d) in dy.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &w[o * self.inp..(o + 1) * self.inp];
                let grow = &mut gw[o * self.inp..(o + 1) * self.inp];
                for i in 0..self.inp {
                    dx[i] += row[i] * d;
                    grow[i] += x[i] * d;
                }
            }
        }
        store.accumulate(self.b, dy);
        dx
    }

    /// Like [`Dense::backward`] but skips the input gradient.
    pub fn backward_params(&self, store: &mut ParamStore, x: &[f64], dy: &[f64]) {
        let gw = store.grad_mut(self.w);
        for (o, &d) in dy.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            let grow = &mut gw[o * self.inp..(o + 1) * self.inp];
            for (g, xi) in grow.iter_mut().zip(x) {
                *g += xi * d;
            }
        }
        store.accumulate(self.b, dy);
    }
}
