use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::Serialize;
use serde_json::{json, Value};

use crate::cli::settings::MODEL_KEYS;
use crate::cli::{CliError, Command, Common, ModelFlags, Settings, TrainFlags};
use crate::corpus::{
    dataset_stats, dedup_by, parse_records, preprocess_tweet, split, Label, Preprocessed, Record, SpellDictionary,
    Viewpoint, DEFAULT_MAX_EDIT_DISTANCE,
};
use crate::dep::{PositionalMode, DEP_K};
use crate::error::Error;
use crate::eval::{
    cohen_kappa, evaluate_predictions, majority_vote, mean_pairwise_kappa, paired_ttest, AgreementMatrix, Prediction,
};
use crate::hints::{guideline_hints, DoubtLexicon};
use crate::model::{
    build_vocabularies, fit, fit_model, initial_model, prepare_example, pretrain_pillars, Branch, Example, Model,
    ModelConfig, TrainConfig, TrainingSplits,
};
use crate::nn::Rng;
use crate::pos::{train_skipgram, NgramEmbedding, NgramVocab, DEP_EMBEDDING_MAGIC, POS_EMBEDDING_MAGIC};
use crate::semantic::{load_embeddings, EmbeddingTable, SemanticSource};

type CliResult<T> = Result<T, CliError>;

pub(crate) fn execute(command: Command, out: &mut dyn Write) -> CliResult<()> {
    match command {
        Command::Preprocess {
            input,
            output,
            dict,
            common,
        } => {
            let mut s = settings(&common)?;
            s.set("input", input.map(display));
            s.set("output", output.map(display));
            s.set("dict", dict.map(display));
            preprocess(&s, out)
        }
        Command::BuildVocab {
            records,
            k,
            output,
            common,
        } => {
            let mut s = settings(&common)?;
            s.set("records", records.map(display));
            s.set("k", k);
            s.set("output", output.map(display));
            build_vocab(&s, out)
        }
        Command::TrainSkipgram {
            records,
            k,
            viewpoint,
            pos_out,
            dep_out,
            skipgram_epochs,
            skipgram_window,
            common,
        } => {
            let mut s = settings(&common)?;
            s.set("records", records.map(display));
            s.set("k", k);
            s.set("viewpoint", viewpoint);
            s.set("pos_out", pos_out.map(display));
            s.set("dep_out", dep_out.map(display));
            s.set("skipgram_epochs", skipgram_epochs);
            s.set("skipgram_window", skipgram_window);
            skipgram(&s, out)
        }
        Command::Pretrain {
            records,
            checkpoint,
            report,
            train,
            common,
        } => {
            let mut s = settings(&common)?;
            s.set("records", records.map(display));
            s.set("checkpoint", checkpoint.map(display));
            s.set("report", report.map(display));
            apply_train_flags(&mut s, &train);
            pretrain(&s, out)
        }
        Command::Train {
            records,
            embeddings,
            checkpoint,
            init,
            history,
            report,
            train,
            common,
        } => {
            let mut s = settings(&common)?;
            s.set("records", records.map(display));
            s.set("embeddings", embeddings.map(display));
            s.set("checkpoint", checkpoint.map(display));
            s.set("init", init.map(display));
            s.set("history", history.map(display));
            s.set("report", report.map(display));
            apply_train_flags(&mut s, &train);
            train_cmd(&s, out)
        }
        Command::Predict {
            checkpoint,
            records,
            embeddings,
            fallback_embeddings,
            force_branch,
            doubt_words,
            output,
            model,
            common,
        } => {
            let mut s = settings(&common)?;
            s.set("checkpoint", checkpoint.map(display));
            s.set("records", records.map(display));
            s.set("embeddings", embeddings.map(display));
            s.flag("fallback_embeddings", fallback_embeddings);
            s.set("doubt_words", doubt_words.map(display));
            s.set("output", output.map(display));
            apply_model_flags(&mut s, &model);
            let forced = force_branch.map(|b| b.parse::<Branch>()).transpose()?;
            predict(&s, forced, out)
        }
        Command::Eval {
            pred,
            gold,
            compare_a,
            compare_b,
            output,
            common,
        } => {
            let mut s = settings(&common)?;
            s.set("pred", pred.map(display));
            s.set("gold", gold.map(display));
            s.set("output", output.map(display));
            let compare = match (compare_a, compare_b) {
                (Some(a), Some(b)) => Some((parse_scores(&a)?, parse_scores(&b)?)),
                _ => None,
            };
            eval(&s, compare, out)
        }
        Command::Stats {
            records,
            output,
            common,
        } => {
            let mut s = settings(&common)?;
            s.set("records", records.map(display));
            s.set("output", output.map(display));
            stats(&s, out)
        }
        Command::Kappa {
            matrix,
            annotations,
            output,
            common,
        } => {
            let mut s = settings(&common)?;
            s.set("output", output.map(display));
            kappa(&s, matrix, annotations, out)
        }
    }
}

fn display(p: PathBuf) -> String {
    p.display().to_string()
}

fn settings(common: &Common) -> CliResult<Settings> {
    let mut s = Settings::load(common.config.as_deref())?;
    s.set("seed", common.seed);
    s.set("threads", common.threads);
    Ok(s)
}

fn apply_model_flags(s: &mut Settings, m: &ModelFlags) {
    s.set("k", m.k);
    s.flag("combined_view", m.combined_view);
    s.set("positional", m.positional.as_deref());
    s.set("dropout", m.dropout);
}

fn apply_train_flags(s: &mut Settings, t: &TrainFlags) {
    s.set("lr", t.lr);
    s.set("epochs", t.epochs);
    s.set("batch_size", t.batch_size);
    s.set("aux_weight", t.aux_weight);
    s.set("pretrain_epochs", t.pretrain_epochs);
    s.set("patience", t.patience);
    s.flag("fallback_embeddings", t.fallback_embeddings);
    s.set("skipgram_init", t.no_skipgram_init.then_some(false));
    s.set("skipgram_epochs", t.skipgram_epochs);
    s.set("skipgram_window", t.skipgram_window);
    apply_model_flags(s, &t.model);
}

fn model_config(s: &Settings, base: ModelConfig) -> CliResult<ModelConfig> {
    let cfg = ModelConfig {
        k: s.get_or("k", base.k)?,
        combined_view: s.get_or("combined_view", base.combined_view)?,
        positional: s.get_or::<PositionalMode>("positional", base.positional)?,
        dropout: s.get_or("dropout", base.dropout)?,
        ..base
    };
    cfg.validate()?;
    Ok(cfg)
}

fn train_config(s: &Settings) -> CliResult<TrainConfig> {
    let d = TrainConfig::default();
    let cfg = TrainConfig {
        lr: s.get_or("lr", d.lr)?,
        epochs: s.get_or("epochs", d.epochs)?,
        batch_size: s.get_or("batch_size", d.batch_size)?,
        seed: s.get_or("seed", d.seed)?,
        aux_weight: s.get_or("aux_weight", d.aux_weight)?,
        pretrain_epochs: s.get_or("pretrain_epochs", d.pretrain_epochs)?,
        fallback_embeddings: s.get_or("fallback_embeddings", d.fallback_embeddings)?,
        patience: s.get_or("patience", d.patience)?,
        skipgram_init: s.get_or("skipgram_init", d.skipgram_init)?,
        skipgram: crate::pos::SkipGramConfig {
            epochs: s.get_or("skipgram_epochs", d.skipgram.epochs)?,
            window: s.get_or("skipgram_window", d.skipgram.window)?,
            ..d.skipgram.clone()
        },
        model: model_config(s, d.model.clone())?,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::from(Error::io(path, e)))
}

/// Writes `text` to the `output` path when configured, else to `out`.
fn emit(s: &Settings, key: &str, text: &str, out: &mut dyn Write) -> CliResult<()> {
    match s.path(key) {
        Some(p) => write_file(&p, text),
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| CliError::data(format!("cannot write output: {e}"))),
    }
}

fn pretty(v: &impl Serialize) -> String {
    serde_json::to_string_pretty(v).expect("output serializes") + "\n"
}

fn read_records(s: &Settings) -> CliResult<Vec<Record>> {
    let path = s.require_path("records")?;
    let records = parse_records(&path)?;
    if records.is_empty() {
        return Err(CliError::data(format!("{}: no records", path.display())));
    }
    Ok(records)
}

fn semantic_source(s: &Settings, dim: usize, fallback: bool) -> CliResult<SemanticSource> {
    Ok(match s.path("embeddings") {
        Some(p) => SemanticSource::from_table(load_embeddings(&p, dim)?, fallback),
        None if fallback => SemanticSource::fallback(dim),
        None => SemanticSource::from_table(EmbeddingTable::new(dim), false),
    })
}

#[derive(Serialize)]
struct CleanLine {
    id: String,
    text: String,
}

fn preprocess(s: &Settings, out: &mut dyn Write) -> CliResult<()> {
    let input = s.require_path("input")?;
    let text = fs::read_to_string(&input).map_err(|e| CliError::from(Error::io(&input, e)))?;
    let dict = match s.path("dict") {
        Some(p) => SpellDictionary::load(&p, DEFAULT_MAX_EDIT_DISTANCE)?,
        None => SpellDictionary::default(),
    };
    let mut kept = Vec::new();
    let mut rejected = 0usize;
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (id, raw) = if line.starts_with('{') {
            let v: Value = serde_json::from_str(line).map_err(|e| {
                CliError::from(Error::Parse {
                    path: input.clone(),
                    line: n + 1,
                    message: e.to_string(),
                })
            })?;
            let raw = v["text"].as_str().ok_or_else(|| {
                CliError::from(Error::Parse {
                    path: input.clone(),
                    line: n + 1,
                    message: "object has no string field \"text\"".into(),
                })
            })?;
            let id = match &v["id"] {
                Value::String(s) => s.clone(),
                Value::Number(x) => x.to_string(),
                _ => format!("line-{}", n + 1),
            };
            (id, raw.to_string())
        } else {
            (format!("line-{}", n + 1), line.to_string())
        };
        match preprocess_tweet(&raw, &dict) {
            Preprocessed::Clean(text) => kept.push(CleanLine { id, text }),
            Preprocessed::Rejected { .. } => rejected += 1,
        }
    }
    let before = kept.len();
    let kept = dedup_by(kept, |c| c.text.as_str());
    info!(
        "preprocess: {} kept, {rejected} too short, {} duplicates",
        kept.len(),
        before - kept.len()
    );
    let body: String = kept
        .iter()
        .map(|c| serde_json::to_string(c).expect("line serializes") + "\n")
        .collect();
    emit(s, "output", &body, out)
}

fn vocab_json(v: &NgramVocab) -> Value {
    let entries: Vec<Value> = v
        .entries()
        .iter()
        .enumerate()
        .map(|(i, g)| json!({"index": i, "ngram": g, "count": v.count(i)}))
        .collect();
    json!({"k": v.k(), "size": v.len(), "entries": entries})
}

fn build_vocab(s: &Settings, out: &mut dyn Write) -> CliResult<()> {
    let records = read_records(s)?;
    let k = s.get_or("k", ModelConfig::default().k)?;
    let vocab = build_vocabularies(&records, k)?;
    let body = json!({"records": records.len(), "pos": vocab_json(&vocab.pos), "dep": vocab_json(&vocab.dep)});
    emit(s, "output", &pretty(&body), out)
}

fn skipgram(s: &Settings, out: &mut dyn Write) -> CliResult<()> {
    let pos_out = s.require_path("pos_out")?;
    let dep_out = s.require_path("dep_out")?;
    let mut records = read_records(s)?;
    if let Some(v) = s.get::<Viewpoint>("viewpoint")? {
        records.retain(|r| r.viewpoint() == v);
        if records.is_empty() {
            return Err(CliError::data(format!("no records for viewpoint {v}")));
        }
    }
    let k = s.get_or("k", ModelConfig::default().k)?;
    let seed: u64 = s.get_or("seed", 0)?;
    let d = TrainConfig::default().skipgram;
    let cfg = crate::pos::SkipGramConfig {
        epochs: s.get_or("skipgram_epochs", d.epochs)?,
        window: s.get_or("skipgram_window", d.window)?,
        ..d
    };
    let vocab = build_vocabularies(&records, k)?;
    let root = Rng::new(seed).derive(3);
    let mut summary = serde_json::Map::new();
    for (stream, (name, v, tags, path, magic)) in [
        ("pos", &vocab.pos, 0, &pos_out, POS_EMBEDDING_MAGIC),
        ("dep", &vocab.dep, 1, &dep_out, DEP_EMBEDDING_MAGIC),
    ]
    .into_iter()
    .enumerate()
    {
        let seqs: Vec<Vec<usize>> = records
            .iter()
            .map(|r| v.encode(if tags == 0 { &r.upos } else { &r.deprel }))
            .collect::<Result<_, _>>()?;
        let mut rng = root.derive(stream as u64);
        let model = train_skipgram(&seqs, v.len(), &cfg, &mut rng)?;
        NgramEmbedding::new(v.clone(), model.embeddings)?.save(path, magic)?;
        summary.insert(
            name.into(),
            json!({"vocab": v.len(), "k": if tags == 0 { k } else { DEP_K }, "losses": model.epoch_losses, "path": path.display().to_string()}),
        );
    }
    summary.insert("records".into(), json!(records.len()));
    out.write_all(pretty(&summary).as_bytes())
        .map_err(|e| CliError::data(e.to_string()))
}

fn examples(records: &[Record], model: &Model, semantic: &SemanticSource) -> CliResult<Vec<Example>> {
    records
        .iter()
        .map(|r| prepare_example(r, &model.vocab, semantic).map_err(CliError::from))
        .collect()
}

fn pretrain(s: &Settings, out: &mut dyn Write) -> CliResult<()> {
    let checkpoint = s.require_path("checkpoint")?;
    let records = read_records(s)?;
    let cfg = train_config(s)?;
    let splits = TrainingSplits::new(&records, cfg.seed)?;
    let (mut model, mut warnings) = initial_model(&splits.train, &cfg)?;
    // Pillars never read the sentence vector, so hashed vectors stand in for it.
    let semantic = SemanticSource::fallback(cfg.model.semantic_dim);
    let train_ex = examples(&splits.train, &model, &semantic)?;
    let report = pretrain_pillars(&mut model, &train_ex, &cfg)?;
    warnings.extend(report.warnings.iter().cloned());
    model.save(&checkpoint)?;
    let body = json!({
        "seed": cfg.seed,
        "train_records": splits.train.len(),
        "param_count": model.param_count(),
        "pillars": report.pillars,
        "warnings": warnings,
    });
    emit(s, "report", &pretty(&body), out)
}

fn train_cmd(s: &Settings, out: &mut dyn Write) -> CliResult<()> {
    let checkpoint = s.require_path("checkpoint")?;
    let records = read_records(s)?;
    let cfg = train_config(s)?;
    let semantic = semantic_source(s, cfg.model.semantic_dim, cfg.fallback_embeddings)?;
    if let Some(id) = semantic.first_missing(&records) {
        return Err(Error::MissingEmbedding(id.to_string()).into());
    }
    let result = match s.path("init") {
        Some(init) => {
            let splits = TrainingSplits::new(&records, cfg.seed)?;
            let model = Model::load(&init, Some(&cfg.model))?;
            fit_model(model, &splits, &semantic, &cfg, false)?
        }
        None => fit(&records, &semantic, &cfg)?,
    };
    for w in &result.warnings {
        warn!("{w}");
    }
    result.model.save(&checkpoint)?;
    if let Some(p) = s.path("history") {
        write_file(&p, &result.train.history_jsonl())?;
    }
    emit(s, "report", &(result.report_json() + "\n"), out)
}

#[derive(Serialize)]
struct PredictionLine<'a> {
    id: &'a str,
    label: Label,
    probs: [f64; 2],
    attention: &'a crate::model::AttentionReport,
    hints: Vec<crate::hints::Hint>,
}

fn predict(s: &Settings, forced: Option<Branch>, out: &mut dyn Write) -> CliResult<()> {
    let checkpoint = s.require_path("checkpoint")?;
    let records = read_records(s)?;
    let model = Model::load(&checkpoint, None)?;
    if MODEL_KEYS.iter().any(|k| s.contains(k)) {
        let runtime = model_config(s, model.config.clone())?;
        model.config.check_compatible(&runtime)?;
    }
    let fallback = s.get_or("fallback_embeddings", false)?;
    let semantic = semantic_source(s, model.config.semantic_dim, fallback)?;
    if let Some(id) = semantic.first_missing(&records) {
        return Err(Error::MissingEmbedding(id.to_string()).into());
    }
    let doubt = match s.path("doubt_words") {
        Some(p) => DoubtLexicon::parse(&fs::read_to_string(&p).map_err(|e| CliError::from(Error::io(&p, e)))?),
        None => DoubtLexicon::default(),
    };
    let ex = examples(&records, &model, &semantic)?;
    let outputs = match forced {
        Some(b) => ex.iter().map(|e| model.predict_with(e, Some(b))).collect::<Result<Vec<_>, _>>()?,
        None => model.predict_many(&ex, s.get_or("threads", 1)?)?,
    };
    let mut body = String::new();
    for (r, o) in records.iter().zip(&outputs) {
        let line = PredictionLine {
            id: &r.id,
            label: Label::from_class(o.label),
            probs: [o.probs[0], o.probs[1]],
            attention: &o.attention,
            hints: guideline_hints(&r.text, &doubt),
        };
        body.push_str(&serde_json::to_string(&line).expect("prediction serializes"));
        body.push('\n');
    }
    emit(s, "output", &body, out)
}

fn parse_scores(list: &str) -> CliResult<Vec<f64>> {
    list.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| CliError::usage(format!("bad score {x:?} in {list:?}")))
        })
        .collect()
}

fn read_predictions(path: &Path) -> CliResult<Vec<Prediction>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::from(Error::io(path, e)))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| {
                CliError::from(Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: e.to_string(),
                })
            })
        })
        .collect()
}

fn eval(s: &Settings, compare: Option<(Vec<f64>, Vec<f64>)>, out: &mut dyn Write) -> CliResult<()> {
    let (pred, gold) = (s.require_path("pred")?, s.require_path("gold")?);
    let preds = read_predictions(&pred)?;
    let gold = parse_records(gold)?;
    let mut report = evaluate_predictions(&preds, &gold)?;
    if let Some((a, b)) = compare {
        report.significance = Some(paired_ttest(&a, &b)?);
    }
    emit(s, "output", &pretty(&report), out)
}

fn stats(s: &Settings, out: &mut dyn Write) -> CliResult<()> {
    let records = read_records(s)?;
    let split = s.get::<u64>("seed")?.map(|seed| split(&records, seed)).transpose()?;
    emit(s, "output", &pretty(&dataset_stats(&records, split.as_ref())), out)
}

fn kappa(s: &Settings, matrix: Option<String>, annotations: Option<PathBuf>, out: &mut dyn Write) -> CliResult<()> {
    let body = match (matrix, annotations) {
        (Some(m), _) => {
            let v: Vec<u64> = m
                .split(',')
                .map(|x| x.trim().parse::<u64>())
                .collect::<Result<_, _>>()
                .map_err(|_| CliError::usage(format!("--matrix expects four counts, got {m:?}")))?;
            let [a, b, c, d] = v[..] else {
                return Err(CliError::usage(format!("--matrix expects four counts, got {m:?}")));
            };
            let am = AgreementMatrix::new([[a, b], [c, d]]);
            json!({"kappa": cohen_kappa(&am)?, "counts": am.counts, "n": am.total()})
        }
        (None, Some(path)) => {
            let text = fs::read_to_string(&path).map_err(|e| CliError::from(Error::io(&path, e)))?;
            let mut items: Vec<Vec<Label>> = Vec::new();
            for (i, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let labels: Vec<Label> = serde_json::from_str(line).map_err(|e| {
                    CliError::from(Error::Parse {
                        path: path.clone(),
                        line: i + 1,
                        message: e.to_string(),
                    })
                })?;
                items.push(labels);
            }
            let annotators = items.first().map_or(0, Vec::len);
            if items.iter().any(|l| l.len() != annotators) {
                return Err(CliError::data("every item needs one label per annotator"));
            }
            let by_annotator: Vec<Vec<Label>> = (0..annotators)
                .map(|a| items.iter().map(|l| l[a]).collect())
                .collect();
            let majority = items.iter().map(|l| majority_vote(l)).collect::<Result<Vec<_>, _>>()?;
            let count = |x: Label| majority.iter().filter(|&&m| m == x).count();
            json!({
                "kappa": mean_pairwise_kappa(&by_annotator)?,
                "items": items.len(),
                "annotators": annotators,
                "majority": {"claim": count(Label::Claim), "non_claim": count(Label::NonClaim), "obscure": count(Label::Obscure)},
            })
        }
        (None, None) => return Err(CliError::usage("kappa needs --matrix or --annotations")),
    };
    emit(s, "output", &pretty(&body), out)
}
