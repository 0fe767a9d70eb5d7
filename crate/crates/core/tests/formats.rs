use std::collections::BTreeSet;
use std::fs;

use claimdet::corpus::synthetic::{synthetic_corpus, SyntheticConfig};
use claimdet::corpus::{parse_records, write_records};
use claimdet::model::{build_vocabularies, prepare_example, Model, ModelConfig, PillarTables};
use claimdet::nn::Tensor;
use claimdet::pos::{NgramEmbedding, NgramVocab, DEP_EMBEDDING_MAGIC, POS_EMBEDDING_MAGIC};
use claimdet::semantic::{fallback_embed, load_embeddings, EmbeddingTable, SemanticSource, EMBEDDING_MAGIC, SEMANTIC_DIM};
use claimdet::Error;
use tempfile::TempDir;

fn small_model(k: usize, seed: u64) -> (Model, Vec<claimdet::model::Example>) {
    let records = synthetic_corpus(&SyntheticConfig {
        records: 60,
        seed,
        ..Default::default()
    });
    let vocab = build_vocabularies(&records, k).unwrap();
    let cfg = ModelConfig {
        k,
        ..Default::default()
    };
    let model = Model::build(&cfg, vocab, PillarTables::default(), seed).unwrap();
    let semantic = SemanticSource::fallback(SEMANTIC_DIM);
    let ex = records
        .iter()
        .map(|r| prepare_example(r, &model.vocab, &semantic).unwrap())
        .collect();
    (model, ex)
}

#[test]
fn checkpoint_round_trip_predicts_bit_exactly() {
    let dir = TempDir::new().unwrap();
    let (model, ex) = small_model(3, 1);
    let path = dir.path().join("m.ckpt");
    model.save(&path).unwrap();
    let bytes = fs::read(&path).unwrap();
    assert_eq!(&bytes[..9], b"LESACKPT1");
    let loaded = Model::load(&path, Some(&ModelConfig::default())).unwrap();
    assert_eq!(loaded.config, model.config);
    assert_eq!(loaded.vocab.pos, model.vocab.pos.clone().entries_only());
    for e in &ex {
        let a = model.predict(e).unwrap();
        let b = loaded.predict(e).unwrap();
        assert_eq!(
            a.probs.iter().map(|p| p.to_bits()).collect::<Vec<_>>(),
            b.probs.iter().map(|p| p.to_bits()).collect::<Vec<_>>()
        );
        assert_eq!(a.attention, b.attention);
    }
    assert_eq!(loaded.to_checkpoint_bytes().unwrap(), bytes);
}

trait EntriesOnly {
    fn entries_only(self) -> NgramVocab;
}

impl EntriesOnly for NgramVocab {
    // Counts are not stored in checkpoints.
    fn entries_only(self) -> NgramVocab {
        NgramVocab::from_entries(self.k(), self.entries().to_vec()).unwrap()
    }
}

#[test]
fn checkpoint_guards_against_architecture_mismatch() {
    let (model, _) = small_model(3, 2);
    let bytes = model.to_checkpoint_bytes().unwrap();
    let k2 = ModelConfig {
        k: 2,
        ..Default::default()
    };
    match Model::from_checkpoint_bytes(&bytes, Some(&k2)) {
        Err(Error::ConfigMismatch(m)) => assert!(m.contains("k=3") && m.contains("k=2"), "{m}"),
        other => panic!("expected a config mismatch, got {other:?}"),
    }
    let combined = ModelConfig {
        combined_view: true,
        ..Default::default()
    };
    assert!(matches!(Model::from_checkpoint_bytes(&bytes, Some(&combined)), Err(Error::ConfigMismatch(_))));
    let other_dropout = ModelConfig {
        dropout: 0.5,
        ..Default::default()
    };
    assert!(Model::from_checkpoint_bytes(&bytes, Some(&other_dropout)).is_ok());
    assert!(Model::from_checkpoint_bytes(&bytes, None).is_ok());

    let (k2_model, _) = small_model(2, 2);
    let loaded = Model::from_checkpoint_bytes(&k2_model.to_checkpoint_bytes().unwrap(), Some(&k2)).unwrap();
    assert_eq!(loaded.vocab.pos.k(), 2);
    assert!(loaded.param_count() < model.param_count() + model.param_count());
}

#[test]
fn corrupted_checkpoints_are_rejected() {
    let (model, _) = small_model(3, 3);
    let bytes = model.to_checkpoint_bytes().unwrap();
    let mut bad_magic = bytes.clone();
    bad_magic[0] = b'X';
    assert!(matches!(Model::from_checkpoint_bytes(&bad_magic, None), Err(Error::Format(_))));
    for cut in [4, 20, bytes.len() / 2, bytes.len() - 3] {
        assert!(Model::from_checkpoint_bytes(&bytes[..cut], None).is_err(), "cut at {cut}");
    }
    assert!(Model::from_checkpoint_bytes(&[], None).is_err());
}

#[test]
fn sentence_embedding_file_layout() {
    let dir = TempDir::new().unwrap();
    let mut t = EmbeddingTable::new(2);
    t.insert("a", vec![1.0, -2.5]).unwrap();
    t.insert("bc", vec![0.0, 0.5]).unwrap();
    let path = dir.path().join("e.bin");
    t.save(&path).unwrap();
    let bytes = fs::read(&path).unwrap();
    assert_eq!(&bytes[..8], EMBEDDING_MAGIC);
    // independent parse: magic, u32 count, u32 dim, then (u16 id length, id bytes, dim f32) per row, little endian
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    assert_eq!(u32_at(8), 2);
    assert_eq!(u32_at(12), 2);
    let mut pos = 16;
    let mut rows = Vec::new();
    for _ in 0..2 {
        let len = u16::from_le_bytes([bytes[pos], bytes[pos + 1]]) as usize;
        let id = String::from_utf8(bytes[pos + 2..pos + 2 + len].to_vec()).unwrap();
        pos += 2 + len;
        let v: Vec<f32> = (0..2).map(|j| f32::from_le_bytes(bytes[pos + 4 * j..pos + 4 * j + 4].try_into().unwrap())).collect();
        pos += 8;
        rows.push((id, v));
    }
    assert_eq!(pos, bytes.len());
    assert_eq!(rows, vec![("a".to_string(), vec![1.0, -2.5]), ("bc".to_string(), vec![0.0, 0.5])]);

    let back = load_embeddings(&path, 2).unwrap();
    assert_eq!(back.get("bc"), Some(&[0.0f32, 0.5][..]));
    assert!(matches!(load_embeddings(&path, 768), Err(Error::ConfigMismatch(_))));
    fs::write(&path, &bytes[..bytes.len() - 1]).unwrap();
    assert!(load_embeddings(&path, 2).is_err());
}

#[test]
fn ngram_embedding_text_files() {
    let vocab = NgramVocab::from_entries(
        3,
        vec![
            vec!["<UNK>".into()],
            vec!["<BOS>".into(), "DET".into(), "NOUN".into()],
            vec!["DET".into(), "NOUN".into(), "VERB".into()],
        ],
    )
    .unwrap();
    let table = Tensor::from_vec(&[3, 2], vec![0.0, 0.0, 0.25, -1.0, 1.5, 2.0]).unwrap();
    let emb = NgramEmbedding::new(vocab, table).unwrap();
    let text = emb.to_text(POS_EMBEDDING_MAGIC).unwrap();
    assert!(text.starts_with("LESAPOS1 3 2 3\n"));
    let back = NgramEmbedding::from_text(&text, POS_EMBEDDING_MAGIC).unwrap();
    assert_eq!(back.to_text(POS_EMBEDDING_MAGIC).unwrap(), text);
    assert!(matches!(NgramEmbedding::from_text(&text, DEP_EMBEDDING_MAGIC), Err(Error::Format(_))));
    let short: String = text.lines().take(2).map(|l| format!("{l}\n")).collect();
    assert!(NgramEmbedding::from_text(&short, POS_EMBEDDING_MAGIC).is_err());
}

#[test]
fn export_contract_records_and_embeddings_cover_the_same_ids() {
    let dir = TempDir::new().unwrap();
    let records = synthetic_corpus(&SyntheticConfig {
        records: 20,
        seed: 4,
        ..Default::default()
    });
    write_records(dir.path().join("r.jsonl"), &records).unwrap();
    let mut t = EmbeddingTable::new(SEMANTIC_DIM);
    for r in &records {
        t.insert(r.id.clone(), fallback_embed(&r.text, SEMANTIC_DIM).into_iter().map(|x| x as f32).collect())
            .unwrap();
    }
    t.save(dir.path().join("e.bin")).unwrap();

    let parsed = parse_records(dir.path().join("r.jsonl")).unwrap();
    let table = load_embeddings(dir.path().join("e.bin"), SEMANTIC_DIM).unwrap();
    assert_eq!(table.dim(), 768);
    let a: BTreeSet<&str> = parsed.iter().map(|r| r.id.as_str()).collect();
    let b: BTreeSet<&str> = table.ids().iter().map(String::as_str).collect();
    assert_eq!(a, b);
    assert_eq!(parsed, records.iter().cloned().map(|mut r| {
        r.viewpoint = Some(r.viewpoint());
        r
    }).collect::<Vec<_>>());
}

#[test]
fn malformed_records_report_their_line() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("r.jsonl");
    let good = r#"{"id":"a","text":"t","tokens":["x","y"],"upos":["NOUN","VERB"],"deprel":["nsubj","root"],"head":[2,0],"label":1,"source":"TWR"}"#;
    let bad_len = r#"{"id":"b","text":"t","tokens":["x","y"],"upos":["NOUN"],"deprel":["nsubj","root"],"head":[2,0],"label":0,"source":"OC"}"#;
    fs::write(&path, format!("{good}\n\n{bad_len}\n")).unwrap();
    match parse_records(&path) {
        Err(Error::Parse { line, message, .. }) => {
            assert_eq!(line, 3);
            assert!(message.contains("upos"), "{message}");
        }
        other => panic!("expected parse error, got {other:?}"),
    }
    let bad_head = good.replace("[2,0]", "[3,0]");
    fs::write(&path, format!("{bad_head}\n")).unwrap();
    assert!(parse_records(&path).is_err());
    let wrong_view = good.replace(r#""source":"TWR""#, r#""source":"TWR","viewpoint":"non_noisy""#);
    fs::write(&path, format!("{wrong_view}\n")).unwrap();
    assert!(parse_records(&path).is_err());
    let bad_label = good.replace(r#""label":1"#, r#""label":"2""#);
    fs::write(&path, format!("{bad_label}\n")).unwrap();
    assert!(parse_records(&path).is_err());
    fs::write(&path, format!("{good}\n")).unwrap();
    assert_eq!(parse_records(&path).unwrap()[0].head, vec![2, 0]);
}
