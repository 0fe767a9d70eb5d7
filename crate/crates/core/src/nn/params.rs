use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::nn::{Rng, Tensor};

/// Handle to a tensor registered in a [`ParamStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(usize);

#[derive(Clone, Debug)]
struct Param {
    name: String,
    value: Tensor,
    grad: Tensor,
    adam_m: Tensor,
    adam_v: Tensor,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Every trainable tensor of a model together with its gradient and Adam moments.
///
/// Parameters keep their registration order, which is also the checkpoint order.
#[derive(Clone, Debug, Default)]
pub struct ParamStore {
    params: Vec<Param>,
    by_name: BTreeMap<String, ParamId>,
    step_count: u64,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor) -> Result<ParamId> {
        let name = name.into();
        if self.by_name.contains_key(&name) {
            return Err(Error::InvalidArgument(format!(
                "parameter {name} registered twice"
            )));
        }
        let zeros = Tensor::zeros(value.shape());
        let id = ParamId(self.params.len());
        self.params.push(Param {
            name: name.clone(),
            grad: zeros.clone(),
            adam_m: zeros.clone(),
            adam_v: zeros,
            value,
        });
        self.by_name.insert(name, id);
        Ok(id)
    }

    /// Glorot/Xavier uniform init for an `out x inp` matrix.
    pub fn add_glorot(
        &mut self,
        name: impl Into<String>,
        out: usize,
        inp: usize,
        rng: &mut Rng,
    ) -> Result<ParamId> {
        let limit = (6.0 / (out + inp) as f64).sqrt();
        self.add_uniform(name, &[out, inp], limit, rng)
    }

    pub fn add_uniform(
        &mut self,
        name: impl Into<String>,
        shape: &[usize],
        limit: f64,
        rng: &mut Rng,
    ) -> Result<ParamId> {
        let len = shape.iter().product();
        let data = (0..len).map(|_| rng.uniform(-limit, limit)).collect();
        self.add(name, Tensor::from_vec(shape, data)?)
    }

    pub fn add_const(&mut self, name: impl Into<String>, shape: &[usize], value: f64) -> Result<ParamId> {
        let mut t = Tensor::zeros(shape);
        t.fill(value);
        self.add(name, t)
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.by_name.get(name).copied()
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.params[id.0].name
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn num_scalars(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    pub fn value(&self, id: ParamId) -> &Tensor {
        &self.params[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.params[id.0].value
    }

    pub fn grad(&self, id: ParamId) -> &Tensor {
        &self.params[id.0].grad
    }

    pub fn grad_mut(&mut self, id: ParamId) -> &mut [f64] {
        self.params[id.0].grad.data_mut()
    }

    /// Borrow a parameter's value and its gradient buffer at once.
    pub fn value_and_grad(&mut self, id: ParamId) -> (&[f64], &mut [f64]) {
        let p = &mut self.params[id.0];
        (p.value.data(), p.grad.data_mut())
    }

    pub fn accumulate(&mut self, id: ParamId, delta: &[f64]) {
        let g = self.grad_mut(id);
        debug_assert_eq!(g.len(), delta.len());
        for (g, d) in g.iter_mut().zip(delta) {
            *g += d;
        }
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.params {
            p.grad.fill(0.0);
        }
    }

    pub fn scale_grads(&mut self, factor: f64) {
        for p in &mut self.params {
            p.grad.data_mut().iter_mut().for_each(|g| *g *= factor);
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// Clears Adam moments and the step counter.
    pub fn reset_optimizer(&mut self) {
        for p in &mut self.params {
            p.adam_m.fill(0.0);
            p.adam_v.fill(0.0);
        }
        self.step_count = 0;
    }

    /// One Adam update over every parameter with bias correction; gradients
    /// are zeroed afterwards.
    pub fn adam_step(&mut self, lr: f64, cfg: &AdamConfig) -> Result<()> {
        if let Some(p) = self.params.iter().find(|p| !p.grad.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite gradient in parameter {}",
                p.name
            )));
        }
        self.step_count += 1;
        let t = self.step_count as i32;
        let bc1 = 1.0 - cfg.beta1.powi(t);
        let bc2 = 1.0 - cfg.beta2.powi(t);
        for p in &mut self.params {
            let value = p.value.data_mut();
            let grad = p.grad.data_mut();
            let m = p.adam_m.data_mut();
            let v = p.adam_v.data_mut();
            for i in 0..value.len() {
                let g = grad[i];
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                value[i] -= lr * m_hat / (v_hat.sqrt() + cfg.epsilon);
                grad[i] = 0.0;
            }
        }
        Ok(())
    }

    /// Snapshot of every parameter value, in registration order.
    pub fn snapshot(&self) -> Vec<Tensor> {
        self.params.iter().map(|p| p.value.clone()).collect()
    }

    pub fn restore(&mut self, snapshot: &[Tensor]) -> Result<()> {
        if snapshot.len() != self.params.len() {
            return Err(Error::Shape("snapshot size differs from store".into()));
        }
        for (p, t) in self.params.iter_mut().zip(snapshot) {
            if p.value.shape() != t.shape() {
                return Err(Error::Shape(format!("snapshot shape differs for {}", p.name)));
            }
            p.value = t.clone();
        }
        Ok(())
    }

    /// `(name, value)` pairs in registration order.
    pub fn named_values(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.params.iter().map(|p| (p.name.as_str(), &p.value))
    }

    /// Overwrite every parameter by name. The name sets and shapes must match exactly.
    pub fn load_named(&mut self, tensors: Vec<(String, Tensor)>) -> Result<()> {
        if tensors.len() != self.params.len() {
            return Err(Error::Format(format!(
                "expected {} tensors, found {}",
                self.params.len(),
                tensors.len()
            )));
        }
        for (name, t) in tensors {
            let id = self
                .id(&name)
                .ok_or_else(|| Error::Format(format!("unknown tensor {name}")))?;
            let slot = &mut self.params[id.0].value;
            if slot.shape() != t.shape() {
                return Err(Error::Format(format!(
                    "tensor {name} has shape {:?}, expected {:?}",
                    t.shape(),
                    slot.shape()
                )));
            }
            *slot = t;
        }
        Ok(())
    }

    /// Re-draw every value uniformly in `[-scale, scale]`; used to move
    /// gradient checks away from structured initial points.
    pub fn randomize(&mut self, scale: f64, rng: &mut Rng) {
        for p in &mut self.params {
            for x in p.value.data_mut() {
                *x = rng.uniform(-scale, scale);
            }
        }
    }
}
