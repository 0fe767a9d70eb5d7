use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary confusion counts with claim as the positive class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    /// Counts from parallel predicted/gold class lists (1 = claim, 0 = non-claim).
    pub fn from_labels(pred: &[usize], gold: &[usize]) -> Result<Self> {
        if pred.len() != gold.len() {
            return Err(Error::Shape(format!("{} predictions for {} gold labels", pred.len(), gold.len())));
        }
        let mut cm = ConfusionMatrix::default();
        for (&p, &g) in pred.iter().zip(gold) {
            cm.add(p, g)?;
        }
        Ok(cm)
    }

    pub fn add(&mut self, pred: usize, gold: usize) -> Result<()> {
        match (pred, gold) {
            (1, 1) => self.tp += 1,
            (1, 0) => self.fp += 1,
            (0, 1) => self.fn_ += 1,
            (0, 0) => self.tn += 1,
            _ => return Err(Error::InvalidArgument(format!("class pair ({pred}, {gold}) is not binary"))),
        }
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct F1Scores {
    pub c_f1: f64,
    pub nonclaim_f1: f64,
    pub m_f1: f64,
}

fn f1(hit: u64, miss_a: u64, miss_b: u64) -> f64 {
    let denom = 2 * hit + miss_a + miss_b;
    if denom == 0 {
        0.0
    } else {
        2.0 * hit as f64 / denom as f64
    }
}

/// Claim F1, non-claim F1 and their mean. Undefined ratios count as 0.
pub fn f1_scores(cm: &ConfusionMatrix) -> Result<F1Scores> {
    if cm.total() == 0 {
        return Err(Error::InsufficientData("F1 of an empty confusion matrix".into()));
    }
    let c_f1 = f1(cm.tp, cm.fp, cm.fn_);
    let nonclaim_f1 = f1(cm.tn, cm.fn_, cm.fp);
    Ok(F1Scores {
        c_f1,
        nonclaim_f1,
        m_f1: (c_f1 + nonclaim_f1) / 2.0,
    })
}

/// `Σ value·size / Σ size`.
pub fn weighted_average(per_dataset: &[(f64, u64)]) -> Result<f64> {
    if per_dataset.is_empty() {
        return Err(Error::InsufficientData("weighted average of nothing".into()));
    }
    if let Some((_, s)) = per_dataset.iter().find(|(_, s)| *s == 0) {
        return Err(Error::InvalidArgument(format!("dataset size {s} must be positive")));
    }
    let total: u64 = per_dataset.iter().map(|(_, s)| s).sum();
    let sum: f64 = per_dataset.iter().map(|(v, s)| v * *s as f64).sum();
    Ok(sum / total as f64)
}
