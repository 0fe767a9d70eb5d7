//! Acceptance checks. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line.

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use claimdet::corpus::synthetic::{synthetic_corpus, SyntheticConfig};
use claimdet::corpus::{downsample, preprocess_tweet, Label, Preprocessed, Record, Source, SpellDictionary};
use claimdet::dep::{DepPillar, DepPillarConfig, DepSeq, PositionalMode};
use claimdet::eval::{cohen_kappa, f1_scores, weighted_average, AgreementMatrix, ConfusionMatrix};
use claimdet::model::{
    build_vocabularies, fit, prepare_example, Example, Model, ModelConfig, Network, PillarTables, TrainConfig,
};
use claimdet::nn::{
    gradient_check, AdditiveAttention, BiLstm, Dense, GradCheckConfig, ParamStore, Rng, TransformerBlock,
};
use claimdet::pos::{pos_ngrams, NgramVocab, PosPillar, PosPillarConfig, DISCARD_AT_OR_BELOW, UNK_INDEX};
use claimdet::semantic::{SemanticSource, SEMANTIC_DIM};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

const GRAD_SEEDS: u64 = 10;
const GRAD_TOL: f64 = 1e-4;

fn random_vec(rng: &mut Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect()
}

fn random_seq(rng: &mut Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| random_vec(rng, dim)).collect()
}

fn weighted(out: &[Vec<f64>], w: &[Vec<f64>]) -> f64 {
    out.iter().flatten().zip(w.iter().flatten()).map(|(a, b)| a * b).sum()
}

fn randomize_scores(store: &mut ParamStore, rng: &mut Rng) {
    let ids: Vec<_> = store.ids().filter(|&id| store.name(id).ends_with(".score")).collect();
    for id in ids {
        for x in store.value_mut(id).data_mut() {
            *x = rng.uniform(-0.5, 0.5);
        }
    }
}

fn check(
    store: &mut ParamStore,
    seed: u64,
    loss: impl FnMut(&mut ParamStore, bool) -> claimdet::Result<f64>,
) -> Result<f64, String> {
    let mut rng = Rng::new(seed).derive(99);
    let report = gradient_check(store, loss, &mut rng, &GradCheckConfig::default()).map_err(|e| e.to_string())?;
    if report.max_rel_error < GRAD_TOL {
        Ok(report.max_rel_error)
    } else {
        Err(format!("seed {seed}: {} off by {:.3e}", report.worst_param, report.max_rel_error))
    }
}

fn corpus(seed: u64) -> Vec<Record> {
    synthetic_corpus(&SyntheticConfig {
        seed,
        ..Default::default()
    })
}

fn examples(records: &[Record], model: &Model) -> Vec<Example> {
    let semantic = SemanticSource::fallback(model.config.semantic_dim);
    records
        .iter()
        .map(|r| prepare_example(r, &model.vocab, &semantic).unwrap())
        .collect()
}

fn gradient_suite() -> Outcome {
    let start = Instant::now();
    let mut worst: HashMap<&str, f64> = HashMap::new();
    let mut note = |name: &'static str, e: f64| {
        let w = worst.entry(name).or_insert(0.0);
        *w = w.max(e);
    };
    let records = corpus(5);
    let vocab = build_vocabularies(&records, 3).map_err(|e| e.to_string())?;
    for seed in 0..GRAD_SEEDS {
        let mut rng = Rng::new(seed);

        let mut store = ParamStore::new();
        let dense = Dense::new(&mut store, "dense", 7, 5, &mut rng).unwrap();
        store.randomize(0.5, &mut rng);
        let x = random_vec(&mut rng, 7);
        let w = random_vec(&mut rng, 5);
        note("dense", check(&mut store, seed, |s, b| {
            let y = dense.forward(s, &x);
            if b {
                dense.backward(s, &x, &w);
            }
            Ok(y.iter().zip(&w).map(|(a, b)| a * b).sum())
        })?);

        let mut store = ParamStore::new();
        let lstm = BiLstm::new(&mut store, "lstm", 4, 3, &mut rng).unwrap();
        store.randomize(0.5, &mut rng);
        let n = 2 + rng.below(4);
        let xs = random_seq(&mut rng, n, 4);
        let mut keep = vec![true; n];
        keep[n - 1] = seed % 2 == 0;
        let w = random_seq(&mut rng, n, 6);
        note("bilstm", check(&mut store, seed, |s, b| {
            let (out, cache) = lstm.forward(s, &xs, &keep)?;
            if b {
                lstm.backward(s, &xs, &cache, &w);
            }
            Ok(weighted(&out, &w))
        })?);

        let mut store = ParamStore::new();
        let block = TransformerBlock::new(&mut store, "tr", 10, 5, 16, &mut rng).unwrap();
        store.randomize(0.5, &mut rng);
        let n = 2 + rng.below(4);
        let xs = random_seq(&mut rng, n, 10);
        let mut keep = vec![true; n];
        keep[0] = seed % 3 != 0;
        let w = random_seq(&mut rng, n, 10);
        note("transformer_block", check(&mut store, seed, |s, b| {
            let (out, cache) = block.forward(s, &xs, &keep)?;
            if b {
                block.backward(s, &cache, &w);
            }
            Ok(weighted(&out, &w))
        })?);

        let mut store = ParamStore::new();
        let attn = AdditiveAttention::new(&mut store, "pool", 6, 5, &mut rng).unwrap();
        store.randomize(0.5, &mut rng);
        let n = 2 + rng.below(5);
        let xs = random_seq(&mut rng, n, 6);
        let keep: Vec<bool> = (0..n).map(|i| i == 0 || rng.bernoulli(0.8)).collect();
        let w = random_vec(&mut rng, 6);
        note("attention_pool", check(&mut store, seed, |s, b| {
            let (out, cache) = attn.forward(s, &xs, &keep)?;
            if b {
                attn.backward(s, &xs, &cache, &w);
            }
            Ok(out.iter().zip(&w).map(|(a, b)| a * b).sum())
        })?);

        let mut store = ParamStore::new();
        let pillar = PosPillar::new(&mut store, "pos", 12, &PosPillarConfig::default(), None, None, &mut rng).unwrap();
        randomize_scores(&mut store, &mut rng);
        let idx: Vec<usize> = (0..3 + rng.below(6)).map(|_| rng.below(12)).collect();
        let w = random_vec(&mut rng, 32);
        note("pos_pillar", check(&mut store, seed, |s, b| {
            let (out, cache) = pillar.forward(s, &idx)?;
            if b {
                pillar.backward(s, &cache, &w);
            }
            Ok(out.iter().zip(&w).map(|(a, b)| a * b).sum())
        })?);

        let mut store = ParamStore::new();
        let cfg = DepPillarConfig {
            positional: if seed % 2 == 0 {
                PositionalMode::Sinusoidal
            } else {
                PositionalMode::Learned
            },
            ..Default::default()
        };
        let pillar = DepPillar::new(&mut store, "dep", 12, &cfg, None, None, &mut rng).unwrap();
        let n = 2 + rng.below(6);
        let parents: Vec<usize> = (0..n).map(|_| rng.below(n + 1)).collect();
        let seq = DepSeq::new((0..n).map(|_| rng.below(12)).collect(), parents).unwrap();
        let w = random_vec(&mut rng, 32);
        note("dep_pillar", check(&mut store, seed, |s, b| {
            let (out, cache) = pillar.forward(s, &seq)?;
            if b {
                pillar.backward(s, &cache, &w);
            }
            Ok(out.iter().zip(&w).map(|(a, b)| a * b).sum())
        })?);

        let mut model = Model::build(&ModelConfig::default(), vocab.clone(), PillarTables::default(), seed).unwrap();
        randomize_scores(&mut model.store, &mut rng);
        let pick = rng.below(records.len() - 1);
        let batch = examples(&records[pick..pick + 2], &model);
        let network = &model.network;
        note("full_model", check(&mut model.store, seed, |s, b| {
            let mut dropout = Rng::new(1000 + seed);
            let mut total = 0.0;
            for ex in &batch {
                let label = ex.label.expect("synthetic records are binary");
                let pass = network.forward(s, ex, Some(&mut dropout), None)?;
                total += Network::loss(&pass, label, 0.3)?;
                if b {
                    network.backward(s, &pass, label, 0.3);
                }
            }
            Ok(total)
        })?);
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(300), "took {elapsed:?}");
    let mut parts: Vec<_> = worst.into_iter().collect();
    parts.sort_by(|a, b| a.0.cmp(b.0));
    let detail: Vec<String> = parts.iter().map(|(n, e)| format!("{n} {e:.1e}")).collect();
    Ok(format!("{GRAD_SEEDS} seeds, {:.1}s; worst: {}", elapsed.as_secs_f64(), detail.join(", ")))
}

fn normalization_suite() -> Outcome {
    let records = corpus(9);
    let vocab = build_vocabularies(&records, 3).map_err(|e| e.to_string())?;
    let variants = [
        ModelConfig::default(),
        ModelConfig {
            positional: PositionalMode::Learned,
            ..Default::default()
        },
        ModelConfig {
            combined_view: true,
            ..Default::default()
        },
        ModelConfig {
            positional: PositionalMode::Off,
            ..Default::default()
        },
    ];
    let mut forwards = 0;
    let mut vectors = 0;
    let mut worst: f64 = 0.0;
    for (m, cfg) in variants.iter().enumerate() {
        let mut model = Model::build(cfg, vocab.clone(), PillarTables::default(), m as u64).unwrap();
        let mut rng = Rng::new(50 + m as u64);
        randomize_scores(&mut model.store, &mut rng);
        let ex = examples(&records, &model);
        for i in 0..250 {
            let e = &ex[rng.below(ex.len())];
            let train = i % 2 == 0;
            let pass = if train {
                model.network.forward(&model.store, e, Some(&mut rng), None)
            } else {
                model.network.forward(&model.store, e, None, None)
            }
            .map_err(|e| e.to_string())?;
            forwards += 1;
            for d in pass.distributions() {
                vectors += 1;
                ensure!(d.iter().all(|&p| (0.0..=1.0).contains(&p)), "weight outside [0,1]: {d:?}");
                worst = worst.max((d.iter().sum::<f64>() - 1.0).abs());
            }
        }
    }
    ensure!(forwards == 1000, "ran {forwards} forwards");
    ensure!(worst <= 1e-9, "sum deviates by {worst:e}");
    Ok(format!("{forwards} forwards, {vectors} weight vectors, max |sum-1| = {worst:.1e}"))
}

fn metric_oracle() -> Outcome {
    let mut rng = Rng::new(2024);
    let mut compared = 0;
    for _ in 0..1000 {
        let n = 1 + rng.below(300);
        let bias = rng.unit();
        let pred: Vec<usize> = (0..n).map(|_| rng.bernoulli(bias) as usize).collect();
        let gold: Vec<usize> = (0..n).map(|_| rng.bernoulli(0.5) as usize).collect();
        let (mut tp, mut fp, mut fn_, mut tn) = (0u64, 0u64, 0u64, 0u64);
        for i in 0..n {
            match (pred[i] == 1, gold[i] == 1) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => tn += 1,
            }
        }
        let cm = ConfusionMatrix::from_labels(&pred, &gold).map_err(|e| e.to_string())?;
        ensure!(
            (cm.tp, cm.fp, cm.fn_, cm.tn) == (tp, fp, fn_, tn),
            "confusion {cm:?} vs {:?}",
            (tp, fp, fn_, tn)
        );
        let s = f1_scores(&cm).map_err(|e| e.to_string())?;
        let oracle = |hit: u64, a: u64, b: u64| {
            if 2 * hit + a + b == 0 {
                0.0
            } else {
                (2 * hit) as f64 / (2 * hit + a + b) as f64
            }
        };
        let c = oracle(tp, fp, fn_);
        let nc = oracle(tn, fn_, fp);
        ensure!(s.c_f1 == c, "c-F1 {} != {c}", s.c_f1);
        ensure!(s.nonclaim_f1 == nc, "non-claim F1 {} != {nc}", s.nonclaim_f1);
        ensure!(s.m_f1 == (s.c_f1 + s.nonclaim_f1) / 2.0, "m-F1 is not the class mean");
        // precision/recall form, where defined
        if tp > 0 {
            let p = tp as f64 / (tp + fp) as f64;
            let r = tp as f64 / (tp + fn_) as f64;
            ensure!((2.0 * p * r / (p + r) - c).abs() < 1e-12, "harmonic-mean form disagrees");
        }
        compared += 1;
    }
    Ok(format!("{compared} random vectors match exactly"))
}

fn kappa_reproduction() -> Outcome {
    let k = cohen_kappa(&AgreementMatrix::new([[301, 47], [64, 550]])).map_err(|e| e.to_string())?;
    ensure!((k - 0.753).abs() <= 1e-3, "kappa {k}");
    Ok(format!("kappa = {k:.6}"))
}

fn weighted_average_reproduction() -> Outcome {
    // m-F1 of the 32-dim model per dataset, paired with test-set sizes.
    let rows = [
        (0.62, 1484),
        (0.53, 794),
        (0.55, 864),
        (0.77, 48),
        (0.74, 732),
        (0.68, 278),
        (0.52, 235),
    ];
    let w = weighted_average(&rows).map_err(|e| e.to_string())?;
    ensure!((w - 0.61).abs() <= 0.005, "weighted m-F1 {w}");
    Ok(format!("weighted m-F1 = {w:.5}"))
}

fn positional_identity() -> Outcome {
    let mut rng = Rng::new(77);
    let mut checked = 0;
    for seed in 0..20 {
        let mut store = ParamStore::new();
        let cfg = DepPillarConfig {
            positional: PositionalMode::Off,
            ..Default::default()
        };
        let pillar = DepPillar::new(&mut store, "dep", 30, &cfg, None, None, &mut Rng::new(seed)).unwrap();
        for _ in 0..10 {
            let n = 1 + rng.below(40);
            let parents: Vec<usize> = (0..n).map(|_| rng.below(n + 1)).collect();
            let seq = DepSeq::new((0..n).map(|_| rng.below(30)).collect(), parents).unwrap();
            let encoded = pillar.encode(&store, &seq).map_err(|e| e.to_string())?;
            let raw = pillar.embedding.forward(&store, &seq.trigrams).map_err(|e| e.to_string())?;
            let same = encoded
                .iter()
                .flatten()
                .zip(raw.iter().flatten())
                .all(|(a, b)| a.to_bits() == b.to_bits());
            ensure!(same && encoded.len() == raw.len(), "seed {seed}: encoding differs from raw embedding");
            checked += 1;
        }
    }
    Ok(format!("{checked} sequences bitwise equal"))
}

fn pos_construction() -> Outcome {
    const TAGS: &[&str] = &["NOUN", "VERB", "DET", "ADJ", "ADP", "PRON", "NUM", "PUNCT", "AUX", "ADV"];
    let mut rng = Rng::new(13);
    for i in 0..1000 {
        let n = 1 + rng.below(50);
        let tags: Vec<&str> = (0..n).map(|_| TAGS[rng.below(TAGS.len())]).collect();
        for k in 2..=4 {
            let grams = pos_ngrams(&tags, k).map_err(|e| e.to_string())?;
            ensure!(grams.len() == n, "sequence {i}, k={k}: {} grams for {n} tags", grams.len());
            ensure!(grams.iter().all(|g| g.len() == k), "sequence {i}: wrong gram width");
        }
    }
    // exhaustive frequency cut on a fixture
    let tagged = corpus(21);
    let fixture: Vec<Vec<&str>> = tagged
        .iter()
        .take(40)
        .map(|r| r.upos.iter().map(String::as_str).collect())
        .chain([vec!["INTJ", "X"], vec!["INTJ", "X"], vec!["SYM", "X"], vec!["SYM", "X"], vec!["SYM", "X"]])
        .collect();
    let mut kept = 0;
    let mut dropped = 0;
    for k in 2..=4 {
        let vocab = NgramVocab::build(fixture.iter().map(|s| s.as_slice()), k).map_err(|e| e.to_string())?;
        let mut counts: HashMap<Vec<String>, u64> = HashMap::new();
        for seq in &fixture {
            for g in pos_ngrams(seq, k).map_err(|e| e.to_string())? {
                *counts.entry(g).or_insert(0) += 1;
            }
        }
        let mut want = 1;
        for (g, &c) in &counts {
            let idx = vocab.lookup(g);
            if c > DISCARD_AT_OR_BELOW {
                ensure!(idx != UNK_INDEX && vocab.count(idx) == c, "k={k}: {g:?} (count {c}) missing");
                want += 1;
                kept += 1;
            } else {
                ensure!(idx == UNK_INDEX, "k={k}: {g:?} (count {c}) should be excluded");
                dropped += 1;
            }
        }
        ensure!(vocab.len() == want, "k={k}: vocabulary has {} entries, expected {want}", vocab.len());
    }
    ensure!(dropped > 0 && kept > 0, "fixture does not exercise both sides of the cut");
    Ok(format!("1000 sequences x k in 2..=4; {kept} kept / {dropped} excluded k-grams verified"))
}

fn preprocessing_conformance() -> Outcome {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data");
    let text = std::fs::read_to_string(format!("{dir}/raw_tweets.txt")).map_err(|e| e.to_string())?;
    let dict = SpellDictionary::load(format!("{dir}/dict.tsv"), 2).map_err(|e| e.to_string())?;
    let tweets: Vec<&str> = text.lines().collect();
    ensure!(tweets.len() == 50, "fixture has {} tweets", tweets.len());
    let (mut clean, mut rejected) = (0, 0);
    for t in &tweets {
        match preprocess_tweet(t, &dict) {
            Preprocessed::Clean(s) => {
                clean += 1;
                ensure!(s.is_ascii(), "non-ASCII left in {s:?}");
                for tok in s.split_whitespace() {
                    ensure!(!tok.starts_with('#') && !tok.starts_with('@'), "hashtag/handle left in {s:?}");
                    ensure!(!tok.contains("://") && !tok.to_ascii_lowercase().starts_with("www."), "URL left in {s:?}");
                }
                ensure!(s.len() >= 20 && s.split_whitespace().count() >= 4, "short text accepted: {s:?}");
                ensure!(
                    preprocess_tweet(&s, &dict) == Preprocessed::Clean(s.clone()),
                    "not idempotent on {s:?}"
                );
            }
            Preprocessed::Rejected { chars, words } => {
                rejected += 1;
                ensure!(chars < 20 || words < 4, "{t:?} rejected with {chars} chars / {words} words");
            }
        }
    }
    ensure!(rejected > 0 && clean > 0, "fixture does not exercise rejection");
    Ok(format!("{clean} cleaned, {rejected} rejected"))
}

fn e2e_config(seed: u64) -> TrainConfig {
    TrainConfig {
        seed,
        fallback_embeddings: true,
        epochs: 30,
        ..Default::default()
    }
}

fn end_to_end() -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    for seed in [1, 2, 3] {
        let records = corpus(seed);
        let out = fit(&records, &SemanticSource::fallback(SEMANTIC_DIM), &e2e_config(seed)).map_err(|e| e.to_string())?;
        let reached = out.train.history.iter().find(|h| h.val_c_f1 >= 0.95).map(|h| h.epoch);
        ensure!(
            reached.is_some_and(|e| e <= 30),
            "seed {seed}: best val c-F1 {:.3}",
            out.train.best_val_c_f1
        );
        parts.push(format!("seed {seed}: c-F1 {:.3} at epoch {}", out.train.best_val_c_f1, reached.unwrap()));
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(120), "took {elapsed:?}");
    Ok(format!("{}; {:.1}s", parts.join(", "), elapsed.as_secs_f64()))
}

fn determinism() -> Outcome {
    let records = corpus(4);
    let run = || -> Result<(Vec<u8>, String), String> {
        let out = fit(&records, &SemanticSource::fallback(SEMANTIC_DIM), &e2e_config(4)).map_err(|e| e.to_string())?;
        Ok((out.model.to_checkpoint_bytes().map_err(|e| e.to_string())?, out.report_json()))
    };
    let (ck1, rep1) = run()?;
    let (ck2, rep2) = run()?;
    ensure!(ck1 == ck2, "checkpoints differ");
    ensure!(rep1 == rep2, "reports differ");
    Ok(format!("checkpoint {} bytes and report identical", ck1.len()))
}

fn fixture(claims: usize, non_claims: usize) -> Vec<Record> {
    (0..claims + non_claims)
        .map(|i| Record {
            id: format!("d{i}"),
            text: format!("text {i}"),
            tokens: vec!["w".into()],
            upos: vec!["NOUN".into()],
            deprel: vec!["root".into()],
            head: vec![0],
            label: if i % (claims + non_claims) < claims {
                Label::Claim
            } else {
                Label::NonClaim
            },
            source: Source::TWR,
            viewpoint: None,
        })
        .collect()
}

fn downsampling() -> Outcome {
    let count = |rs: &[Record]| {
        (
            rs.iter().filter(|r| r.label == Label::Claim).count(),
            rs.iter().filter(|r| r.label == Label::NonClaim).count(),
        )
    };
    let mut rng = Rng::new(3);
    for trial in 0..200 {
        let c = 1 + rng.below(300);
        let n = 1 + rng.below(300);
        let out = downsample(&fixture(c, n), trial).map_err(|e| e.to_string())?;
        let m = c.min(n);
        ensure!(count(&out) == (m, m), "({c}, {n}) -> {:?}", count(&out));
    }
    let out = downsample(&fixture(7354, 1055), 0).map_err(|e| e.to_string())?;
    ensure!(count(&out) == (1055, 1055), "(7354, 1055) -> {:?}", count(&out));
    Ok("200 random fixtures balanced; (7354, 1055) -> (1055, 1055)".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("gradient suite", gradient_suite),
        ("normalization suite", normalization_suite),
        ("metric oracle", metric_oracle),
        ("kappa reproduction", kappa_reproduction),
        ("weighted-average reproduction", weighted_average_reproduction),
        ("positional-signal identity", positional_identity),
        ("POS construction", pos_construction),
        ("preprocessing conformance", preprocessing_conformance),
        ("end-to-end learning", end_to_end),
        ("determinism", determinism),
        ("downsampling", downsampling),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
