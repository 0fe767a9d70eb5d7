use log::{info, warn};
use serde::Serialize;

use crate::dep::DepPillarCache;
use crate::error::{Error, Result};
use crate::eval::{ConfusionMatrix, DatasetMetrics};
use crate::model::{Example, Model, Network, TrainConfig};
use crate::nn::ops::{cross_entropy, softmax, softmax_cross_entropy_grad};
use crate::nn::{AdamConfig, Dense, ParamStore, Rng, Tensor};
use crate::pos::PosPillarCache;

/// One line of the training history.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean training loss over the epoch.
    pub loss: f64,
    pub val_m_f1: f64,
    pub val_c_f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainReport {
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_c_f1: f64,
    pub best_val_m_f1: f64,
    pub stopped_early: bool,
    pub param_count: usize,
}

impl TrainReport {
    /// History as JSON Lines.
    pub fn history_jsonl(&self) -> String {
        self.history
            .iter()
            .map(|r| serde_json::to_string(r).expect("history serializes") + "\n")
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PillarPretrain {
    pub pillar: String,
    pub records: usize,
    /// Mean loss per epoch; empty when the pillar was skipped.
    pub losses: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PretrainReport {
    pub pillars: Vec<PillarPretrain>,
    pub warnings: Vec<String>,
}

fn labelled(examples: &[Example]) -> Vec<(&Example, usize)> {
    examples.iter().filter_map(|e| e.label.map(|l| (e, l))).collect()
}

fn check_finite(loss: f64, what: &str, id: &str) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(Error::Numeric(format!("{what}: non-finite loss on record {id}")))
    }
}

#[derive(Clone, Copy)]
enum PillarRef {
    Pos(usize),
    Dep(usize),
}

enum PillarCache {
    Pos(PosPillarCache),
    Dep(DepPillarCache),
}

/// Trains each pillar with a throwaway linear softmax head on the training
/// examples of its own viewpoint (all examples for combined-view pillars).
/// Pillars whose viewpoint has no examples keep their initial weights.
pub fn pretrain_pillars(model: &mut Model, examples: &[Example], cfg: &TrainConfig) -> Result<PretrainReport> {
    let mut report = PretrainReport::default();
    let mut rng = Rng::new(cfg.seed).derive(1);
    let adam = AdamConfig::default();
    let pillars: Vec<PillarRef> = (0..model.network.pos_pillars.len())
        .map(PillarRef::Pos)
        .chain((0..model.network.dep_pillars.len()).map(PillarRef::Dep))
        .collect();
    for which in pillars {
        let (branch, viewpoint) = match which {
            PillarRef::Pos(i) => ("pos", model.network.pos_pillars[i].viewpoint),
            PillarRef::Dep(i) => ("dep", model.network.dep_pillars[i].viewpoint),
        };
        let name = match viewpoint {
            Some(v) => format!("{branch}.{v}"),
            None => format!("{branch}.combined"),
        };
        let data: Vec<(&Example, usize)> = labelled(examples)
            .into_iter()
            .filter(|(e, _)| viewpoint.is_none_or(|v| e.viewpoint == v))
            .collect();
        if data.is_empty() || cfg.pretrain_epochs == 0 {
            if data.is_empty() {
                let msg = format!("pillar {name}: no training records for its viewpoint, pre-training skipped");
                warn!("{msg}");
                report.warnings.push(msg);
            }
            report.pillars.push(PillarPretrain {
                pillar: name,
                records: data.len(),
                losses: Vec::new(),
            });
            continue;
        }
        let mut head_store = ParamStore::new();
        let head = Dense::new(&mut head_store, "pretrain.head", model.config.fusion_dim, 2, &mut rng)?;
        model.store.reset_optimizer();
        model.store.zero_grads();
        let mut order: Vec<usize> = (0..data.len()).collect();
        let mut losses = Vec::with_capacity(cfg.pretrain_epochs);
        for epoch in 0..cfg.pretrain_epochs {
            rng.shuffle(&mut order);
            let mut total = 0.0;
            for batch in order.chunks(cfg.batch_size) {
                for &i in batch {
                    let (ex, label) = data[i];
                    let net = &model.network;
                    let (out, cache) = match which {
                        PillarRef::Pos(p) => {
                            let (out, c) = net.pos_pillars[p].forward(&model.store, &ex.pos)?;
                            (out, PillarCache::Pos(c))
                        }
                        PillarRef::Dep(p) => {
                            let (out, c) = net.dep_pillars[p].forward(&model.store, &ex.dep)?;
                            (out, PillarCache::Dep(c))
                        }
                    };
                    let probs = softmax(&head.forward(&head_store, &out))?;
                    let loss = cross_entropy(&probs, label)?;
                    check_finite(loss, &format!("pre-training {name} epoch {}", epoch + 1), &ex.id)?;
                    total += loss;
                    let dout = head.backward(&mut head_store, &out, &softmax_cross_entropy_grad(&probs, label));
                    match (which, &cache) {
                        (PillarRef::Pos(p), PillarCache::Pos(c)) => net.pos_pillars[p].backward(&mut model.store, c, &dout),
                        (PillarRef::Dep(p), PillarCache::Dep(c)) => net.dep_pillars[p].backward(&mut model.store, c, &dout),
                        _ => unreachable!("cache kind follows pillar kind"),
                    }
                }
                let scale = 1.0 / batch.len() as f64;
                model.store.scale_grads(scale);
                head_store.scale_grads(scale);
                model.store.adam_step(cfg.lr, &adam)?;
                head_store.adam_step(cfg.lr, &adam)?;
            }
            let mean = total / data.len() as f64;
            info!("pre-train {name} epoch {}: loss {mean:.5}", epoch + 1);
            losses.push(mean);
        }
        report.pillars.push(PillarPretrain {
            pillar: name,
            records: data.len(),
            losses,
        });
    }
    model.store.reset_optimizer();
    model.store.zero_grads();
    Ok(report)
}

/// Class predictions and metrics of `model` on the labelled part of `examples`.
pub(crate) fn score(model: &Model, examples: &[Example]) -> Result<Option<DatasetMetrics>> {
    let mut cm = ConfusionMatrix::default();
    for (ex, gold) in labelled(examples) {
        cm.add(model.predict(ex)?.label, gold)?;
    }
    if cm.total() == 0 {
        return Ok(None);
    }
    DatasetMetrics::from_confusion(cm).map(Some)
}

/// Joint mini-batch training of every parameter on
/// `CE(main) + aux_weight · Σ CE(aux)`. The parameters with the best
/// validation claim-F1 are restored at the end.
pub fn train(model: &mut Model, train_set: &[Example], val_set: &[Example], cfg: &TrainConfig) -> Result<TrainReport> {
    cfg.validate()?;
    let data = labelled(train_set);
    if data.is_empty() {
        return Err(Error::InsufficientData("training set has no binary-labelled records".into()));
    }
    if labelled(val_set).is_empty() {
        return Err(Error::InsufficientData("validation set has no binary-labelled records".into()));
    }
    let mut rng = Rng::new(cfg.seed).derive(2);
    let adam = AdamConfig::default();
    model.store.reset_optimizer();
    model.store.zero_grads();
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(usize, f64, f64, Vec<Tensor>)> = None;
    let mut since_best = 0;
    let mut stopped_early = false;
    for epoch in 1..=cfg.epochs {
        rng.shuffle(&mut order);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            for &i in batch {
                let (ex, label) = data[i];
                let pass = model.network.forward(&model.store, ex, Some(&mut rng), None)?;
                let loss = Network::loss(&pass, label, cfg.aux_weight)?;
                check_finite(loss, &format!("epoch {epoch}"), &ex.id)?;
                total += loss;
                model.network.backward(&mut model.store, &pass, label, cfg.aux_weight);
            }
            model.store.scale_grads(1.0 / batch.len() as f64);
            model.store.adam_step(cfg.lr, &adam)?;
        }
        let val = score(model, val_set)?.expect("validation set is labelled");
        let record = EpochRecord {
            epoch,
            loss: total / data.len() as f64,
            val_m_f1: val.m_f1,
            val_c_f1: val.c_f1,
        };
        info!(
            "epoch {epoch}: loss {:.5} val m-F1 {:.4} c-F1 {:.4}",
            record.loss, record.val_m_f1, record.val_c_f1
        );
        history.push(record);
        if best.as_ref().is_none_or(|b| val.c_f1 > b.1) {
            best = Some((epoch, val.c_f1, val.m_f1, model.store.snapshot()));
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                stopped_early = epoch < cfg.epochs;
                break;
            }
        }
    }
    let (best_epoch, best_val_c_f1, best_val_m_f1) = match best {
        Some((e, c, m, snapshot)) => {
            model.store.restore(&snapshot)?;
            (e, c, m)
        }
        None => (0, 0.0, 0.0),
    };
    model.store.reset_optimizer();
    Ok(TrainReport {
        history,
        best_epoch,
        best_val_c_f1,
        best_val_m_f1,
        stopped_early,
        param_count: model.param_count(),
    })
}
