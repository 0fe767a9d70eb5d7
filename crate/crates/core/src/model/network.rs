use serde::{Deserialize, Serialize};

use crate::corpus::{Record, Viewpoint};
use crate::dep::{DepPillar, DepPillarCache, DepSeq};
use crate::error::{Error, Result};
use crate::fusion::{Fusion, FusionOutput};
use crate::model::ModelConfig;
use crate::nn::ops::{cross_entropy, relu, relu_backward, softmax, softmax_cross_entropy_grad};
use crate::nn::{Dense, DropoutMask, ParamStore, Rng, Tensor};
use crate::pos::{NgramVocab, PosPillar, PosPillarCache};
use crate::semantic::{SemanticCache, SemanticHead, SemanticSource};

/// The three inputs to the final fusion, in fusion order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Pos,
    Dep,
    Semantic,
}

impl Branch {
    pub const ALL: [Branch; 3] = [Branch::Pos, Branch::Dep, Branch::Semantic];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Pos => "pos",
            Branch::Dep => "dep",
            Branch::Semantic => "semantic",
        }
    }
}

impl std::str::FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Branch::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown branch {s:?}")))
    }
}

/// POS n-gram and dependency tri-gram vocabularies shared by all pillars.
#[derive(Clone, Debug, PartialEq)]
pub struct Vocabularies {
    pub pos: NgramVocab,
    pub dep: NgramVocab,
}

/// Optional initial embedding tables, one per pillar in pillar order.
#[derive(Clone, Debug, Default)]
pub struct PillarTables {
    pub pos: Vec<Option<Tensor>>,
    pub dep: Vec<Option<Tensor>>,
}

/// A record turned into model inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub id: String,
    pub viewpoint: Viewpoint,
    pub pos: Vec<usize>,
    pub dep: DepSeq,
    pub semantic: Vec<f64>,
    /// Gold class, if the record is binary-labelled.
    pub label: Option<usize>,
}

/// Every layer of the model; parameter values live in a separate [`ParamStore`].
#[derive(Clone, Debug)]
pub struct Network {
    pub pos_pillars: Vec<PosPillar>,
    pub dep_pillars: Vec<DepPillar>,
    pub pos_fusion: Option<Fusion>,
    pub dep_fusion: Option<Fusion>,
    pub semantic: SemanticHead,
    pub branch_fusion: Fusion,
    pub head: [Dense; 3],
    pub aux: [Dense; 3],
    dropout: f64,
}

/// Softmax outputs and attention weights of one forward pass.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AttentionReport {
    /// Per-viewpoint weights inside the POS branch (a single 1.0 in combined view).
    pub pos_views: Vec<f64>,
    pub dep_views: Vec<f64>,
    /// Weights of the POS, dependency and semantic branches.
    pub branches: Vec<f64>,
}

pub struct ForwardPass {
    pub probs: Vec<f64>,
    pub aux_probs: [Vec<f64>; 3],
    pub attention: AttentionReport,
    pos: Vec<(Vec<f64>, PosPillarCache)>,
    dep: Vec<(Vec<f64>, DepPillarCache)>,
    pos_fused: Option<FusionOutput>,
    dep_fused: Option<FusionOutput>,
    semantic: SemanticCache,
    branches: Vec<Vec<f64>>,
    branch_fused: Option<FusionOutput>,
    forced: Option<Branch>,
    z: Vec<f64>,
    h1_pre: Vec<f64>,
    mask: DropoutMask,
    h1: Vec<f64>,
    h2_pre: Vec<f64>,
    h2: Vec<f64>,
}

impl ForwardPass {
    /// Every normalised weight vector of the pass: class distributions,
    /// pillar pooling, transformer attention rows and both fusion levels.
    pub fn distributions(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = vec![&self.probs];
        out.extend(self.aux_probs.iter().map(Vec::as_slice));
        out.extend(self.pos.iter().map(|(_, c)| c.pool_weights()));
        for (_, c) in &self.dep {
            out.extend(c.transformer().attention_rows());
        }
        for f in [&self.pos_fused, &self.dep_fused, &self.branch_fused].into_iter().flatten() {
            out.push(&f.weights);
        }
        out
    }
}

fn pillar_suffixes(cfg: &ModelConfig) -> Vec<(String, Option<Viewpoint>)> {
    if cfg.combined_view {
        vec![("combined".into(), None)]
    } else {
        Viewpoint::ALL.iter().map(|v| (v.as_str().to_string(), Some(*v))).collect()
    }
}

fn fuse(store: &ParamStore, fusion: &Option<Fusion>, outs: Vec<Vec<f64>>) -> Result<(Vec<f64>, Option<FusionOutput>, Vec<f64>)> {
    match fusion {
        Some(f) => {
            let out = f.forward(store, &outs)?;
            Ok((out.fused.clone(), Some(out.clone()), out.weights))
        }
        None => Ok((outs.into_iter().next().expect("one pillar"), None, vec![1.0])),
    }
}

impl Network {
    /// Registers every parameter in `store`, drawing initial values from `rng`.
    pub fn build(
        store: &mut ParamStore,
        cfg: &ModelConfig,
        vocab: &Vocabularies,
        tables: PillarTables,
        rng: &mut Rng,
    ) -> Result<Self> {
        cfg.validate()?;
        if vocab.pos.k() != cfg.k {
            return Err(Error::ConfigMismatch(format!(
                "POS vocabulary has k={}, config has k={}",
                vocab.pos.k(),
                cfg.k
            )));
        }
        let n = cfg.pillars_per_branch();
        let mut pos_tables = tables.pos.into_iter();
        let mut dep_tables = tables.dep.into_iter();
        let mut pos_pillars = Vec::with_capacity(n);
        let mut dep_pillars = Vec::with_capacity(n);
        let (pos_cfg, dep_cfg) = (cfg.pos_pillar(), cfg.dep_pillar());
        for (suffix, vp) in pillar_suffixes(cfg) {
            pos_pillars.push(PosPillar::new(
                store,
                &format!("pos.{suffix}"),
                vocab.pos.len(),
                &pos_cfg,
                pos_tables.next().flatten(),
                vp,
                rng,
            )?);
        }
        for (suffix, vp) in pillar_suffixes(cfg) {
            dep_pillars.push(DepPillar::new(
                store,
                &format!("dep.{suffix}"),
                vocab.dep.len(),
                &dep_cfg,
                dep_tables.next().flatten(),
                vp,
                rng,
            )?);
        }
        let view_fusion = |store: &mut ParamStore, name: &str, rng: &mut Rng| -> Result<Option<Fusion>> {
            if cfg.combined_view {
                Ok(None)
            } else {
                Fusion::new(store, name, cfg.fusion_dim, cfg.attn_hidden, rng).map(Some)
            }
        };
        let pos_fusion = view_fusion(store, "pos.fusion", rng)?;
        let dep_fusion = view_fusion(store, "dep.fusion", rng)?;
        let semantic = SemanticHead::new(store, "sem", cfg.semantic_dim, cfg.semantic_hidden, cfg.fusion_dim, rng)?;
        let branch_fusion = Fusion::new(store, "fusion", cfg.fusion_dim, cfg.attn_hidden, rng)?;
        let head = [
            Dense::new(store, "head.1", cfg.fusion_dim, cfg.head_hidden, rng)?,
            Dense::new(store, "head.2", cfg.head_hidden, cfg.head_hidden2, rng)?,
            Dense::new(store, "head.3", cfg.head_hidden2, 2, rng)?,
        ];
        let aux = [
            Dense::new(store, "aux.pos", cfg.fusion_dim, 2, rng)?,
            Dense::new(store, "aux.dep", cfg.fusion_dim, 2, rng)?,
            Dense::new(store, "aux.semantic", cfg.fusion_dim, 2, rng)?,
        ];
        Ok(Network {
            pos_pillars,
            dep_pillars,
            pos_fusion,
            dep_fusion,
            semantic,
            branch_fusion,
            head,
            aux,
            dropout: cfg.dropout,
        })
    }

    /// `train_rng` enables dropout; `forced` replaces the branch attention by a
    /// one-hot choice of a single branch.
    pub fn forward(
        &self,
        store: &ParamStore,
        ex: &Example,
        train_rng: Option<&mut Rng>,
        forced: Option<Branch>,
    ) -> Result<ForwardPass> {
        let pos: Vec<(Vec<f64>, PosPillarCache)> = self
            .pos_pillars
            .iter()
            .map(|p| p.forward(store, &ex.pos))
            .collect::<Result<_>>()?;
        let dep: Vec<(Vec<f64>, DepPillarCache)> = self
            .dep_pillars
            .iter()
            .map(|p| p.forward(store, &ex.dep))
            .collect::<Result<_>>()?;
        let (pos_vec, pos_fused, pos_views) = fuse(store, &self.pos_fusion, pos.iter().map(|(o, _)| o.clone()).collect())?;
        let (dep_vec, dep_fused, dep_views) = fuse(store, &self.dep_fusion, dep.iter().map(|(o, _)| o.clone()).collect())?;
        let (sem_vec, semantic) = self.semantic.forward(store, &ex.semantic)?;
        let branches = vec![pos_vec, dep_vec, sem_vec];
        let (z, branch_fused, branch_weights) = match forced {
            Some(b) => {
                let mut w = vec![0.0; 3];
                w[b.index()] = 1.0;
                (branches[b.index()].clone(), None, w)
            }
            None => {
                let out = self.branch_fusion.forward(store, &branches)?;
                (out.fused.clone(), Some(out.clone()), out.weights)
            }
        };
        let h1_pre = self.head[0].forward(store, &z);
        let mask = match train_rng {
            Some(rng) => DropoutMask::sample(h1_pre.len(), self.dropout, rng),
            None => DropoutMask::identity(h1_pre.len()),
        };
        let h1 = mask.apply(&relu(&h1_pre));
        let h2_pre = self.head[1].forward(store, &h1);
        let h2 = relu(&h2_pre);
        let probs = softmax(&self.head[2].forward(store, &h2))?;
        let aux_probs = [
            softmax(&self.aux[0].forward(store, &branches[0]))?,
            softmax(&self.aux[1].forward(store, &branches[1]))?,
            softmax(&self.aux[2].forward(store, &branches[2]))?,
        ];
        Ok(ForwardPass {
            probs,
            aux_probs,
            attention: AttentionReport {
                pos_views,
                dep_views,
                branches: branch_weights,
            },
            pos,
            dep,
            pos_fused,
            dep_fused,
            semantic,
            branches,
            branch_fused,
            forced,
            z,
            h1_pre,
            mask,
            h1,
            h2_pre,
            h2,
        })
    }

    /// `CE(main) + aux_weight · Σ CE(aux)` for a forward pass.
    pub fn loss(pass: &ForwardPass, label: usize, aux_weight: f64) -> Result<f64> {
        let mut loss = cross_entropy(&pass.probs, label)?;
        if aux_weight != 0.0 {
            for p in &pass.aux_probs {
                loss += aux_weight * cross_entropy(p, label)?;
            }
        }
        Ok(loss)
    }

    /// Accumulates the gradient of [`loss`](Self::loss) into `store`.
    pub fn backward(&self, store: &mut ParamStore, pass: &ForwardPass, label: usize, aux_weight: f64) {
        let dlogits = softmax_cross_entropy_grad(&pass.probs, label);
        let dh2 = self.head[2].backward(store, &pass.h2, &dlogits);
        let dh2_pre = relu_backward(&pass.h2_pre, &dh2);
        let dh1 = self.head[1].backward(store, &pass.h1, &dh2_pre);
        let dh1_pre = relu_backward(&pass.h1_pre, &pass.mask.backward(&dh1));
        let dz = self.head[0].backward(store, &pass.z, &dh1_pre);

        let mut dbranches = match (&pass.branch_fused, pass.forced) {
            (Some(out), _) => self.branch_fusion.backward(store, &pass.branches, out, &dz),
            (None, Some(b)) => {
                let mut d = vec![vec![0.0; dz.len()]; 3];
                d[b.index()] = dz;
                d
            }
            (None, None) => unreachable!("branch fusion output missing"),
        };
        if aux_weight != 0.0 {
            for (i, aux) in self.aux.iter().enumerate() {
                let g: Vec<f64> = softmax_cross_entropy_grad(&pass.aux_probs[i], label)
                    .into_iter()
                    .map(|v| v * aux_weight)
                    .collect();
                let d = aux.backward(store, &pass.branches[i], &g);
                dbranches[i].iter_mut().zip(d).for_each(|(a, b)| *a += b);
            }
        }

        let dpos = match (&self.pos_fusion, &pass.pos_fused) {
            (Some(f), Some(out)) => {
                let outs: Vec<Vec<f64>> = pass.pos.iter().map(|(o, _)| o.clone()).collect();
                f.backward(store, &outs, out, &dbranches[0])
            }
            _ => vec![dbranches[0].clone()],
        };
        for ((pillar, (_, cache)), d) in self.pos_pillars.iter().zip(&pass.pos).zip(&dpos) {
            pillar.backward(store, cache, d);
        }
        let ddep = match (&self.dep_fusion, &pass.dep_fused) {
            (Some(f), Some(out)) => {
                let outs: Vec<Vec<f64>> = pass.dep.iter().map(|(o, _)| o.clone()).collect();
                f.backward(store, &outs, out, &dbranches[1])
            }
            _ => vec![dbranches[1].clone()],
        };
        for ((pillar, (_, cache)), d) in self.dep_pillars.iter().zip(&pass.dep).zip(&ddep) {
            pillar.backward(store, cache, d);
        }
        self.semantic.backward(store, &pass.semantic, &dbranches[2]);
    }
}

/// Encodes `record` for `vocab`, resolving its sentence vector through `semantic`.
pub fn prepare_example(record: &Record, vocab: &Vocabularies, semantic: &SemanticSource) -> Result<Example> {
    record.validate()?;
    Ok(Example {
        id: record.id.clone(),
        viewpoint: record.viewpoint(),
        pos: vocab.pos.encode(&record.upos)?,
        dep: DepSeq::from_record(record, &vocab.dep)?,
        semantic: semantic.vector(record)?,
        label: record.label.class(),
    })
}
