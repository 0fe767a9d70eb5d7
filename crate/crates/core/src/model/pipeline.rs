use log::{info, warn};
use serde::Serialize;

use crate::corpus::{downsample, split, Record, Split, Viewpoint};
use crate::dep::DEP_K;
use crate::error::{Error, Result};
use crate::eval::DatasetMetrics;
use crate::model::train::score;
use crate::model::{
    pretrain_pillars, prepare_example, train, Example, Model, ModelConfig, PillarTables, PretrainReport, TrainConfig,
    TrainReport, Vocabularies,
};
use crate::nn::Rng;
use crate::pos::{train_skipgram, NgramVocab, SkipGramConfig};
use crate::semantic::SemanticSource;

/// POS (order `k`) and dependency tri-gram vocabularies over `records`.
pub fn build_vocabularies(records: &[Record], k: usize) -> Result<Vocabularies> {
    if records.is_empty() {
        return Err(Error::InsufficientData("cannot build vocabularies from no records".into()));
    }
    Ok(Vocabularies {
        pos: NgramVocab::build(records.iter().map(|r| r.upos.as_slice()), k)?,
        dep: NgramVocab::build(records.iter().map(|r| r.deprel.as_slice()), DEP_K)?,
    })
}

/// Skip-gram tables for every pillar, each trained on the records of the
/// pillar's viewpoint. Viewpoints too small to train on get `None` and a warning.
pub fn skipgram_tables(
    records: &[Record],
    vocab: &Vocabularies,
    model: &ModelConfig,
    skipgram: &SkipGramConfig,
    seed: u64,
) -> Result<(PillarTables, Vec<String>)> {
    let groups: Vec<(String, Option<Viewpoint>)> = if model.combined_view {
        vec![("combined".into(), None)]
    } else {
        Viewpoint::ALL.iter().map(|v| (v.to_string(), Some(*v))).collect()
    };
    let cfg = SkipGramConfig {
        dim: model.embed_dim,
        ..skipgram.clone()
    };
    let root = Rng::new(seed).derive(3);
    let mut tables = PillarTables::default();
    let mut warnings = Vec::new();
    for (g, (name, vp)) in groups.iter().enumerate() {
        let subset: Vec<&Record> = records.iter().filter(|r| vp.is_none_or(|v| r.viewpoint() == v)).collect();
        for (branch, v, out) in [("pos", &vocab.pos, &mut tables.pos), ("dep", &vocab.dep, &mut tables.dep)] {
            let seqs: Vec<Vec<usize>> = subset
                .iter()
                .map(|r| v.encode(if branch == "pos" { &r.upos } else { &r.deprel }))
                .collect::<Result<_>>()?;
            let mut rng = root.derive(2 * g as u64 + (branch == "dep") as u64);
            match train_skipgram(&seqs, v.len(), &cfg, &mut rng) {
                Ok(m) => {
                    info!("skip-gram {branch}.{name}: final loss {:?}", m.epoch_losses.last());
                    out.push(Some(m.embeddings));
                }
                Err(Error::InsufficientData(why)) => {
                    let msg = format!("skip-gram {branch}.{name} skipped: {why}");
                    warn!("{msg}");
                    warnings.push(msg);
                    out.push(None);
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok((tables, warnings))
}

fn examples(records: &[Record], vocab: &Vocabularies, semantic: &SemanticSource) -> Result<Vec<Example>> {
    records.iter().map(|r| prepare_example(r, vocab, semantic)).collect()
}

/// Everything produced by [`fit`].
pub struct FitOutput {
    pub model: Model,
    pub split: Split,
    pub pretrain: PretrainReport,
    pub train: TrainReport,
    pub test: Option<DatasetMetrics>,
    pub warnings: Vec<String>,
}

#[derive(Serialize)]
struct FitSummary<'a> {
    seed: u64,
    train_records: usize,
    val_records: usize,
    test_records: usize,
    pretrain: &'a PretrainReport,
    train: &'a TrainReport,
    test: &'a Option<DatasetMetrics>,
    warnings: &'a [String],
}

impl FitOutput {
    /// Deterministic JSON summary of the run (no timings or paths).
    pub fn report_json(&self) -> String {
        let summary = FitSummary {
            seed: self.split.seed,
            train_records: self.split.train.len(),
            val_records: self.split.val.len(),
            test_records: self.split.test.len(),
            pretrain: &self.pretrain,
            train: &self.train,
            test: &self.test,
            warnings: &self.warnings,
        };
        serde_json::to_string_pretty(&summary).expect("report serializes")
    }
}

/// A split corpus with its training part downsampled to 1:1.
#[derive(Clone, Debug)]
pub struct TrainingSplits {
    pub split: Split,
    pub train: Vec<Record>,
    pub val: Vec<Record>,
    pub test: Vec<Record>,
}

impl TrainingSplits {
    pub fn new(records: &[Record], seed: u64) -> Result<Self> {
        let split = split(records, seed)?;
        let (train, val, test) = split.partition(records);
        let train = downsample(&train, seed)?;
        Ok(TrainingSplits { split, train, val, test })
    }

    pub fn all(&self) -> impl Iterator<Item = &Record> {
        self.train.iter().chain(&self.val).chain(&self.test)
    }
}

/// Vocabularies from the training records, optional skip-gram initialisation,
/// and freshly initialised parameters.
pub fn initial_model(train_records: &[Record], cfg: &TrainConfig) -> Result<(Model, Vec<String>)> {
    cfg.validate()?;
    let vocab = build_vocabularies(train_records, cfg.model.k)?;
    let mut warnings = Vec::new();
    let tables = if cfg.skipgram_init {
        let (t, w) = skipgram_tables(train_records, &vocab, &cfg.model, &cfg.skipgram, cfg.seed)?;
        warnings.extend(w);
        t
    } else {
        PillarTables::default()
    };
    let model = Model::build(&cfg.model, vocab, tables, cfg.seed)?;
    info!("model has {} trainable parameters", model.param_count());
    Ok((model, warnings))
}

/// Optional pillar pre-training, joint training and test scoring of `model`.
pub fn fit_model(
    mut model: Model,
    splits: &TrainingSplits,
    semantic: &SemanticSource,
    cfg: &TrainConfig,
    pretrain: bool,
) -> Result<FitOutput> {
    let semantic = SemanticSource {
        fallback: semantic.fallback || cfg.fallback_embeddings,
        ..semantic.clone()
    };
    if let Some(id) = semantic.first_missing(splits.all()) {
        return Err(Error::MissingEmbedding(id.to_string()));
    }
    let train_ex = examples(&splits.train, &model.vocab, &semantic)?;
    let val_ex = examples(&splits.val, &model.vocab, &semantic)?;
    let test_ex = examples(&splits.test, &model.vocab, &semantic)?;
    let pretrain_report = if pretrain {
        pretrain_pillars(&mut model, &train_ex, cfg)?
    } else {
        PretrainReport::default()
    };
    let report = train(&mut model, &train_ex, &val_ex, cfg)?;
    let test = score(&model, &test_ex)?;
    Ok(FitOutput {
        model,
        split: splits.split.clone(),
        warnings: pretrain_report.warnings.clone(),
        pretrain: pretrain_report,
        train: report,
        test,
    })
}

/// Split → downsample the training part → vocabularies → skip-gram
/// initialisation → pillar pre-training → joint training → test scoring.
pub fn fit(records: &[Record], semantic: &SemanticSource, cfg: &TrainConfig) -> Result<FitOutput> {
    cfg.validate()?;
    let splits = TrainingSplits::new(records, cfg.seed)?;
    if !(semantic.fallback || cfg.fallback_embeddings) {
        if let Some(id) = semantic.first_missing(splits.all()) {
            return Err(Error::MissingEmbedding(id.to_string()));
        }
    }
    let (model, mut warnings) = initial_model(&splits.train, cfg)?;
    let mut out = fit_model(model, &splits, semantic, cfg, true)?;
    warnings.append(&mut out.warnings);
    out.warnings = warnings;
    Ok(out)
}
