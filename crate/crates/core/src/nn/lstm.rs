use crate::error::{Error, Result};
use crate::nn::ops::sigmoid;
use crate::nn::{ParamId, ParamStore, Rng};

/// Half-width of the uniform init used for recurrent weights.
pub const RECURRENT_INIT: f64 = 0.08;

/// One LSTM direction. Gate rows are stacked `[input; forget; cell; output]`.
#[derive(Clone, Debug)]
pub struct LstmCell {
    pub wx: ParamId,
    pub wh: ParamId,
    pub b: ParamId,
    inp: usize,
    hidden: usize,
}

#[derive(Clone, Debug)]
struct Step {
    pos: usize,
    i: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
    o: Vec<f64>,
    c_prev: Vec<f64>,
    h_prev: Vec<f64>,
    tanh_c: Vec<f64>,
}

impl LstmCell {
    pub fn new(store: &mut ParamStore, name: &str, inp: usize, hidden: usize, rng: &mut Rng) -> Result<Self> {
        let wx = store.add_uniform(format!("{name}.wx"), &[4 * hidden, inp], RECURRENT_INIT, rng)?;
        let wh = store.add_uniform(format!("{name}.wh"), &[4 * hidden, hidden], RECURRENT_INIT, rng)?;
        let b = store.add_const(format!("{name}.b"), &[4 * hidden], 0.0)?;
        Ok(LstmCell {
            wx,
            wh,
            b,
            inp,
            hidden,
        })
    }

    /// Runs the recurrence over `order` (indices into `xs`), returning the
    /// hidden state for each visited position.
    fn run(&self, store: &ParamStore, xs: &[Vec<f64>], order: &[usize]) -> (Vec<Vec<f64>>, Vec<Step>) {
        let h = self.hidden;
        let wx = store.value(self.wx).data();
        let wh = store.value(self.wh).data();
        let b = store.value(self.b).data();
        let mut h_prev = vec![0.0; h];
        let mut c_prev = vec![0.0; h];
        let mut outs = Vec::with_capacity(order.len());
        let mut steps = Vec::with_capacity(order.len());
        for &pos in order {
            let x = &xs[pos];
            let mut z = b.to_vec();
            for (r, zr) in z.iter_mut().enumerate() {
                let rx = &wx[r * self.inp..(r + 1) * self.inp];
                let rh = &wh[r * h..(r + 1) * h];
                *zr += rx.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
                    + rh.iter().zip(&h_prev).map(|(a, b)| a * b).sum::<f64>();
            }
            let i: Vec<f64> = z[..h].iter().map(|&v| sigmoid(v)).collect();
            let f: Vec<f64> = z[h..2 * h].iter().map(|&v| sigmoid(v)).collect();
            let g: Vec<f64> = z[2 * h..3 * h].iter().map(|v| v.tanh()).collect();
            let o: Vec<f64> = z[3 * h..].iter().map(|&v| sigmoid(v)).collect();
            let c: Vec<f64> = (0..h).map(|k| f[k] * c_prev[k] + i[k] * g[k]).collect();
            let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
            let h_new: Vec<f64> = (0..h).map(|k| o[k] * tanh_c[k]).collect();
            steps.push(Step {
                pos,
                i,
                f,
                g,
                o,
                c_prev: std::mem::replace(&mut c_prev, c),
                h_prev: std::mem::replace(&mut h_prev, h_new.clone()),
                tanh_c,
            });
            outs.push(h_new);
        }
        (outs, steps)
    }

    /// Backprop through time. `dh_out[t]` is the gradient on the output of step `t`.
    fn backward(&self, store: &mut ParamStore, xs: &[Vec<f64>], steps: &[Step], dh_out: &[Vec<f64>], dxs: &mut [Vec<f64>]) {
        let h = self.hidden;
        let mut gwx = vec![0.0; 4 * h * self.inp];
        let mut gwh = vec![0.0; 4 * h * h];
        let mut gb = vec![0.0; 4 * h];
        {
            let wx = store.value(self.wx).data();
            let wh = store.value(self.wh).data();
            let mut dh_next = vec![0.0; h];
            let mut dc_next = vec![0.0; h];
            for (t, s) in steps.iter().enumerate().rev() {
                let mut dz = vec![0.0; 4 * h];
                for k in 0..h {
                    let dh = dh_out[t][k] + dh_next[k];
                    let d_o = dh * s.tanh_c[k];
                    let dc = dh * s.o[k] * (1.0 - s.tanh_c[k] * s.tanh_c[k]) + dc_next[k];
                    let di = dc * s.g[k];
                    let dg = dc * s.i[k];
                    let df = dc * s.c_prev[k];
                    dc_next[k] = dc * s.f[k];
                    dz[k] = di * s.i[k] * (1.0 - s.i[k]);
                    dz[h + k] = df * s.f[k] * (1.0 - s.f[k]);
                    dz[2 * h + k] = dg * (1.0 - s.g[k] * s.g[k]);
                    dz[3 * h + k] = d_o * s.o[k] * (1.0 - s.o[k]);
                }
                let x = &xs[s.pos];
                dh_next.iter_mut().for_each(|v| *v = 0.0);
                let dx = &mut dxs[s.pos];
                for (r, &d) in dz.iter().enumerate() {
                    gb[r] += d;
                    if d == 0.0 {
                        continue;
                    }
                    let rx = r * self.inp;
                    for c in 0..self.inp {
                        gwx[rx + c] += d * x[c];
                        dx[c] += d * wx[rx + c];
                    }
                    let rh = r * h;
                    for c in 0..h {
                        gwh[rh + c] += d * s.h_prev[c];
                        dh_next[c] += d * wh[rh + c];
                    }
                }
            }
        }
        store.accumulate(self.wx, &gwx);
        store.accumulate(self.wh, &gwh);
        store.accumulate(self.b, &gb);
    }
}

/// Bidirectional LSTM. Output at each real position is `[h_forward; h_backward]`;
/// masked positions are skipped by both recurrences and emit zeros.
#[derive(Clone, Debug)]
pub struct BiLstm {
    pub forward_cell: LstmCell,
    pub backward_cell: LstmCell,
    inp: usize,
    hidden: usize,
}

#[derive(Clone, Debug)]
pub struct BiLstmCache {
    fwd: Vec<Step>,
    bwd: Vec<Step>,
    len: usize,
}

impl BiLstm {
    pub fn new(store: &mut ParamStore, name: &str, inp: usize, hidden: usize, rng: &mut Rng) -> Result<Self> {
        let forward_cell = LstmCell::new(store, &format!("{name}.fwd"), inp, hidden, rng)?;
        let backward_cell = LstmCell::new(store, &format!("{name}.bwd"), inp, hidden, rng)?;
        Ok(BiLstm {
            forward_cell,
            backward_cell,
            inp,
            hidden,
        })
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn output_dim(&self) -> usize {
        2 * self.hidden
    }

    pub fn forward(&self, store: &ParamStore, xs: &[Vec<f64>], keep: &[bool]) -> Result<(Vec<Vec<f64>>, BiLstmCache)> {
        if xs.is_empty() {
            return Err(Error::InvalidArgument("BiLSTM over empty sequence".into()));
        }
        if xs.len() != keep.len() {
            return Err(Error::Shape("BiLSTM mask length differs from sequence".into()));
        }
        if let Some(x) = xs.iter().find(|x| x.len() != self.inp) {
            return Err(Error::Shape(format!(
                "BiLSTM input dim {} != configured {}",
                x.len(),
                self.inp
            )));
        }
        let order: Vec<usize> = (0..xs.len()).filter(|&i| keep[i]).collect();
        let rev: Vec<usize> = order.iter().rev().copied().collect();
        let (hf, fwd) = self.forward_cell.run(store, xs, &order);
        let (hb, bwd) = self.backward_cell.run(store, xs, &rev);
        let h = self.hidden;
        let mut out = vec![vec![0.0; 2 * h]; xs.len()];
        for (t, &pos) in order.iter().enumerate() {
            out[pos][..h].copy_from_slice(&hf[t]);
        }
        for (t, &pos) in rev.iter().enumerate() {
            out[pos][h..].copy_from_slice(&hb[t]);
        }
        Ok((
            out,
            BiLstmCache {
                fwd,
                bwd,
                len: xs.len(),
            },
        ))
    }

    pub fn backward(&self, store: &mut ParamStore, xs: &[Vec<f64>], cache: &BiLstmCache, douts: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let h = self.hidden;
        let mut dxs = vec![vec![0.0; self.inp]; cache.len];
        let dhf: Vec<Vec<f64>> = cache.fwd.iter().map(|s| douts[s.pos][..h].to_vec()).collect();
        let dhb: Vec<Vec<f64>> = cache.bwd.iter().map(|s| douts[s.pos][h..].to_vec()).collect();
        self.forward_cell.backward(store, xs, &cache.fwd, &dhf, &mut dxs);
        self.backward_cell.backward(store, xs, &cache.bwd, &dhb, &mut dxs);
        dxs
    }
}
