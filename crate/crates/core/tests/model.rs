use claimdet::corpus::synthetic::{synthetic_corpus, SyntheticConfig};
use claimdet::corpus::{Record, Source};
use claimdet::eval::ConfusionMatrix;
use claimdet::model::{
    build_vocabularies, fit, pretrain_pillars, prepare_example, train, Branch, Example, Model, ModelConfig, Network,
    PillarTables, TrainConfig,
};
use claimdet::nn::Tensor;
use claimdet::semantic::{SemanticSource, SEMANTIC_DIM};

fn corpus(n: usize, seed: u64, sources: Vec<Source>) -> Vec<Record> {
    synthetic_corpus(&SyntheticConfig {
        records: n,
        seed,
        sources,
        ..Default::default()
    })
}

fn build(records: &[Record], cfg: &ModelConfig, seed: u64) -> (Model, Vec<Example>) {
    let vocab = build_vocabularies(records, cfg.k).unwrap();
    let model = Model::build(cfg, vocab, PillarTables::default(), seed).unwrap();
    let semantic = SemanticSource::fallback(SEMANTIC_DIM);
    let ex = records
        .iter()
        .map(|r| prepare_example(r, &model.vocab, &semantic).unwrap())
        .collect();
    (model, ex)
}

fn all_sources() -> Vec<Source> {
    vec![Source::TWR, Source::OC, Source::PE]
}

fn grads(model: &Model, prefix: &str) -> Vec<f64> {
    model
        .store
        .ids()
        .filter(|&id| model.store.name(id).starts_with(prefix))
        .flat_map(|id| model.store.grad(id).data().to_vec())
        .collect()
}

fn values(model: &Model, prefix: &str) -> Vec<Tensor> {
    model
        .store
        .ids()
        .filter(|&id| model.store.name(id).starts_with(prefix))
        .map(|id| model.store.value(id).clone())
        .collect()
}

#[test]
fn zero_aux_weight_reduces_to_main_cross_entropy() {
    let records = corpus(12, 1, all_sources());
    let (mut model, ex) = build(&records, &ModelConfig::default(), 1);
    for e in &ex {
        let label = e.label.unwrap();
        let pass = model.network.forward(&model.store, e, None, None).unwrap();
        let loss = Network::loss(&pass, label, 0.0).unwrap();
        assert_eq!(loss, -pass.probs[label].ln());
        let with_aux = Network::loss(&pass, label, 0.5).unwrap();
        let aux: f64 = pass.aux_probs.iter().map(|p| -p[label].ln()).sum();
        assert!((with_aux - loss - 0.5 * aux).abs() < 1e-12);

        model.store.zero_grads();
        model.network.backward(&mut model.store, &pass, label, 0.0);
        assert!(grads(&model, "aux.").iter().all(|g| *g == 0.0));
        assert!(grads(&model, "head.").iter().any(|g| *g != 0.0));
        model.store.zero_grads();
        model.network.backward(&mut model.store, &pass, label, 0.5);
        assert!(grads(&model, "aux.").iter().any(|g| *g != 0.0));
    }
}

#[test]
fn forcing_a_branch_sets_one_hot_weights() {
    let records = corpus(10, 2, all_sources());
    let (model, ex) = build(&records, &ModelConfig::default(), 2);
    for e in &ex {
        let free = model.predict(e).unwrap();
        assert_eq!(free.attention.branches.len(), 3);
        assert!(free.attention.branches.iter().all(|w| *w > 0.0 && *w < 1.0));
        let mut outputs = Vec::new();
        for (i, b) in [Branch::Pos, Branch::Dep, Branch::Semantic].into_iter().enumerate() {
            let forced = model.predict_with(e, Some(b)).unwrap();
            let mut expect = vec![0.0; 3];
            expect[i] = 1.0;
            assert_eq!(forced.attention.branches, expect);
            assert!((forced.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert_ne!(forced.probs, free.probs);
            outputs.push(forced.probs);
        }
        assert_ne!(outputs[0], outputs[1]);
        assert_ne!(outputs[1], outputs[2]);
    }
}

#[test]
fn pretraining_skips_viewpoints_without_records() {
    let records = corpus(40, 3, vec![Source::TWR]);
    let (mut model, ex) = build(&records, &ModelConfig::default(), 3);
    let before_semi = values(&model, "pos.semi_noisy");
    let before_non = values(&model, "dep.non_noisy");
    let before_noisy = values(&model, "pos.noisy");
    let cfg = TrainConfig {
        pretrain_epochs: 1,
        ..Default::default()
    };
    let report = pretrain_pillars(&mut model, &ex, &cfg).unwrap();
    assert_eq!(report.pillars.len(), 6);
    assert_eq!(report.warnings.len(), 4, "{:?}", report.warnings);
    assert!(report.warnings.iter().any(|w| w.contains("pos.semi_noisy")));
    for p in &report.pillars {
        if p.pillar.ends_with(".noisy") {
            assert_eq!(p.records, 40);
            assert_eq!(p.losses.len(), 1);
        } else {
            assert_eq!(p.records, 0);
            assert!(p.losses.is_empty());
        }
    }
    assert_eq!(values(&model, "pos.semi_noisy"), before_semi);
    assert_eq!(values(&model, "dep.non_noisy"), before_non);
    assert_ne!(values(&model, "pos.noisy"), before_noisy);
}

#[test]
fn training_restores_the_best_epoch() {
    let records = corpus(90, 5, all_sources());
    let (mut model, ex) = build(&records, &ModelConfig::default(), 5);
    let (train_set, val_set) = ex.split_at(60);
    let cfg = TrainConfig {
        epochs: 6,
        patience: 2,
        seed: 5,
        ..Default::default()
    };
    let report = train(&mut model, train_set, val_set, &cfg).unwrap();
    assert!(report.history.len() <= 6);
    assert_eq!(report.stopped_early, report.history.len() < 6);
    let best = &report.history[report.best_epoch - 1];
    assert_eq!(best.val_c_f1, report.best_val_c_f1);
    assert!(report.history.iter().all(|r| r.val_c_f1 <= report.best_val_c_f1));

    let mut cm = ConfusionMatrix::default();
    for e in val_set {
        cm.add(model.predict(e).unwrap().label, e.label.unwrap()).unwrap();
    }
    let c_f1 = if cm.tp == 0 {
        0.0
    } else {
        2.0 * cm.tp as f64 / (2 * cm.tp + cm.fp + cm.fn_) as f64
    };
    assert!((c_f1 - report.best_val_c_f1).abs() < 1e-12, "{c_f1} vs {}", report.best_val_c_f1);
}

#[test]
fn parallel_prediction_matches_serial() {
    let records = corpus(37, 6, all_sources());
    let (model, ex) = build(&records, &ModelConfig::default(), 6);
    let serial = model.predict_many(&ex, 1).unwrap();
    for threads in [2, 3, 8, 64] {
        assert_eq!(model.predict_many(&ex, threads).unwrap(), serial);
    }
    assert!(model.predict_many(&[], 4).unwrap().is_empty());
}

#[test]
fn combined_view_is_smaller_and_sizes_are_plausible() {
    let records = corpus(60, 7, all_sources());
    let (split, _) = build(&records, &ModelConfig::default(), 7);
    let combined_cfg = ModelConfig {
        combined_view: true,
        ..Default::default()
    };
    let (combined, ex) = build(&records, &combined_cfg, 7);
    assert!(combined.param_count() < split.param_count());
    assert!((500_000..2_000_000).contains(&split.param_count()), "{}", split.param_count());
    let out = combined.predict(&ex[0]).unwrap();
    assert_eq!(out.attention.pos_views, vec![1.0]);
    assert_eq!(out.attention.dep_views, vec![1.0]);
    assert_eq!(split.predict(&ex[0]).unwrap().attention.pos_views.len(), 3);
}

#[test]
fn fit_is_reproducible_for_a_seed() {
    let records = corpus(120, 8, all_sources());
    let cfg = TrainConfig {
        epochs: 2,
        pretrain_epochs: 1,
        seed: 8,
        fallback_embeddings: true,
        skipgram_init: false,
        ..Default::default()
    };
    let semantic = SemanticSource::fallback(SEMANTIC_DIM);
    let a = fit(&records, &semantic, &cfg).unwrap();
    let b = fit(&records, &semantic, &cfg).unwrap();
    assert_eq!(a.report_json(), b.report_json());
    assert_eq!(a.model.to_checkpoint_bytes().unwrap(), b.model.to_checkpoint_bytes().unwrap());
    let c = fit(&records, &semantic, &TrainConfig { seed: 9, ..cfg }).unwrap();
    assert_ne!(a.model.to_checkpoint_bytes().unwrap(), c.model.to_checkpoint_bytes().unwrap());
}
