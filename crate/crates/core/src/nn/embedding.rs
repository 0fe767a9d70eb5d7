use crate::error::{Error, Result};
use crate::nn::{ParamId, ParamStore, Tensor};

/// Trainable lookup table, one row per index.
#[derive(Clone, Debug)]
pub struct Embedding {
    pub table: ParamId,
    rows: usize,
    dim: usize,
}

impl Embedding {
    pub fn new(store: &mut ParamStore, name: &str, table: Tensor) -> Result<Self> {
        if table.shape().len() != 2 {
            return Err(Error::Shape(format!("embedding table must be rank 2, got {:?}", table.shape())));
        }
        let (rows, dim) = (table.rows(), table.cols());
        let table = store.add(name, table)?;
        Ok(Embedding { table, rows, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn forward(&self, store: &ParamStore, indices: &[usize]) -> Result<Vec<Vec<f64>>> {
        let t = store.value(self.table);
        indices
            .iter()
            .map(|&i| {
                if i < self.rows {
                    Ok(t.row(i).to_vec())
                } else {
                    Err(Error::InvalidArgument(format!("index {i} outside table of {}", self.rows)))
                }
            })
            .collect()
    }

    pub fn backward(&self, store: &mut ParamStore, indices: &[usize], drows: &[Vec<f64>]) {
        let g = store.grad_mut(self.table);
        for (&i, d) in indices.iter().zip(drows) {
            for (gv, dv) in g[i * self.dim..(i + 1) * self.dim].iter_mut().zip(d) {
                *gv += dv;
            }
        }
    }
}
