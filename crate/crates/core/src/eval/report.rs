use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::{Label, Record};
use crate::error::{Error, Result};
use crate::eval::{f1_scores, weighted_average, ConfusionMatrix, TTest};

/// One line of a predictions file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetMetrics {
    pub n: u64,
    pub m_f1: f64,
    pub c_f1: f64,
    pub nonclaim_f1: f64,
    pub confusion: ConfusionMatrix,
}

impl DatasetMetrics {
    pub fn from_confusion(cm: ConfusionMatrix) -> Result<Self> {
        let s = f1_scores(&cm)?;
        Ok(DatasetMetrics {
            n: cm.total(),
            m_f1: s.m_f1,
            c_f1: s.c_f1,
            nonclaim_f1: s.nonclaim_f1,
            confusion: cm,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    /// Keyed by source dataset.
    pub datasets: BTreeMap<String, DatasetMetrics>,
    pub overall: DatasetMetrics,
    /// Per-dataset scores averaged with dataset sizes as weights.
    pub weighted_m_f1: f64,
    pub weighted_c_f1: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub significance: Option<TTest>,
}

/// Scores `predictions` against the binary-labelled `gold` records, per source
/// and pooled. Every binary gold record needs exactly one prediction.
pub fn evaluate_predictions(predictions: &[Prediction], gold: &[Record]) -> Result<EvalReport> {
    let mut by_id: HashMap<&str, Label> = HashMap::new();
    for p in predictions {
        if p.label == Label::Obscure {
            return Err(Error::InvalidRecord {
                id: p.id.clone(),
                message: "prediction must be 0 or 1".into(),
            });
        }
        if by_id.insert(p.id.as_str(), p.label).is_some() {
            return Err(Error::InvalidRecord {
                id: p.id.clone(),
                message: "duplicate prediction".into(),
            });
        }
    }
    let mut per: BTreeMap<String, ConfusionMatrix> = BTreeMap::new();
    let mut overall = ConfusionMatrix::default();
    let mut used = 0;
    for r in gold {
        let Some(g) = r.label.class() else { continue };
        let p = by_id.get(r.id.as_str()).ok_or_else(|| Error::InvalidRecord {
            id: r.id.clone(),
            message: "no prediction for gold record".into(),
        })?;
        let p = p.class().expect("checked binary");
        per.entry(r.source.to_string()).or_default().add(p, g)?;
        overall.add(p, g)?;
        used += 1;
    }
    if used != by_id.len() {
        let gold_ids: std::collections::HashSet<&str> = gold.iter().map(|r| r.id.as_str()).collect();
        let stray = predictions.iter().find(|p| !gold_ids.contains(p.id.as_str()));
        let id = stray.map(|p| p.id.clone()).unwrap_or_default();
        return Err(Error::InvalidRecord {
            id,
            message: "prediction has no binary-labelled gold record".into(),
        });
    }
    let datasets: BTreeMap<String, DatasetMetrics> = per
        .into_iter()
        .map(|(k, cm)| Ok((k, DatasetMetrics::from_confusion(cm)?)))
        .collect::<Result<_>>()?;
    let m: Vec<(f64, u64)> = datasets.values().map(|d| (d.m_f1, d.n)).collect();
    let c: Vec<(f64, u64)> = datasets.values().map(|d| (d.c_f1, d.n)).collect();
    Ok(EvalReport {
        overall: DatasetMetrics::from_confusion(overall)?,
        weighted_m_f1: weighted_average(&m)?,
        weighted_c_f1: weighted_average(&c)?,
        datasets,
        significance: None,
    })
}
