use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use claimdet::corpus::synthetic::{synthetic_corpus, SyntheticConfig};
use claimdet::corpus::{write_records, Label, Record};
use claimdet::eval::Prediction;
use claimdet::semantic::{fallback_embed, EmbeddingTable, SEMANTIC_DIM};
use serde_json::Value;
use tempfile::TempDir;

fn claimdet(args: &[&str]) -> Output {
    claimdet_env(args, None)
}

fn claimdet_env(args: &[&str], config: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_claimdet"));
    cmd.args(args).env("RUST_LOG", "warn").env_remove("LESA_CONFIG");
    if let Some(c) = config {
        cmd.env("LESA_CONFIG", c);
    }
    cmd.output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&o.stdout)))
}

struct Fixture {
    dir: TempDir,
    records: Vec<Record>,
}

impl Fixture {
    fn new(n: usize) -> Self {
        let dir = TempDir::new().unwrap();
        let records = synthetic_corpus(&SyntheticConfig {
            records: n,
            seed: 8,
            ..Default::default()
        });
        write_records(dir.path().join("records.jsonl"), &records).unwrap();
        Fixture { dir, records }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn arg(&self, name: &str) -> String {
        self.path(name).display().to_string()
    }

    fn write_embeddings(&self, skip: usize) {
        let mut t = EmbeddingTable::new(SEMANTIC_DIM);
        for r in self.records.iter().skip(skip) {
            let v = fallback_embed(&r.text, SEMANTIC_DIM).into_iter().map(|x| x as f32).collect();
            t.insert(r.id.clone(), v).unwrap();
        }
        t.save(self.path("sentences.emb")).unwrap();
    }

    fn write_gold_predictions(&self) {
        let lines: String = self
            .records
            .iter()
            .map(|r| {
                let p = Prediction {
                    id: r.id.clone(),
                    label: r.label,
                    probs: None,
                };
                serde_json::to_string(&p).unwrap() + "\n"
            })
            .collect();
        fs::write(self.path("pred.jsonl"), lines).unwrap();
    }
}

const QUICK: &[&str] = &["--epochs", "2", "--pretrain-epochs", "1", "--skipgram-epochs", "1"];

#[test]
fn eval_on_matching_files_reports_json() {
    let f = Fixture::new(60);
    f.write_gold_predictions();
    let o = claimdet(&["eval", "--pred", &f.arg("pred.jsonl"), "--gold", &f.arg("records.jsonl")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = stdout_json(&o);
    assert_eq!(report["overall"]["m_f1"], 1.0);
    assert_eq!(report["weighted_c_f1"], 1.0);
    assert!(report["datasets"]["TWR"]["confusion"]["tp"].as_u64().unwrap() > 0);
    assert!(report.get("significance").is_none());
}

#[test]
fn eval_with_comparison_adds_significance() {
    let f = Fixture::new(30);
    f.write_gold_predictions();
    let o = claimdet(&[
        "eval",
        "--pred",
        &f.arg("pred.jsonl"),
        "--gold",
        &f.arg("records.jsonl"),
        "--compare-a",
        "0.81,0.83,0.80,0.82,0.82",
        "--compare-b",
        "0.79,0.80,0.79,0.80,0.80",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let sig = &stdout_json(&o)["significance"];
    assert_eq!(sig["n"], 5);
    assert!((sig["t"].as_f64().unwrap() - 6.324555320336759).abs() < 1e-9);
}

#[test]
fn eval_with_missing_prediction_is_a_data_error() {
    let f = Fixture::new(30);
    f.write_gold_predictions();
    let text = fs::read_to_string(f.path("pred.jsonl")).unwrap();
    let first_line_removed: String = text.lines().skip(1).map(|l| format!("{l}\n")).collect();
    fs::write(f.path("pred.jsonl"), first_line_removed).unwrap();
    let o = claimdet(&["eval", "--pred", &f.arg("pred.jsonl"), "--gold", &f.arg("records.jsonl")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(&f.records[0].id));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(claimdet(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(claimdet(&["eval", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(claimdet(&[]).status.code(), Some(1));
    let o = claimdet(&["eval", "--pred", "p.jsonl"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("gold"));
    assert_eq!(claimdet(&["kappa", "--matrix", "1,2,3"]).status.code(), Some(1));
    assert_eq!(claimdet(&["--help"]).status.code(), Some(0));
}

#[test]
fn train_without_embeddings_names_first_missing_id() {
    let f = Fixture::new(60);
    f.write_embeddings(3);
    let o = claimdet(&[
        "train",
        "--records",
        &f.arg("records.jsonl"),
        "--embeddings",
        &f.arg("sentences.emb"),
        "--checkpoint",
        &f.arg("m.ckpt"),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(&f.records[0].id), "{}", stderr(&o));
    assert!(!f.path("m.ckpt").exists());
}

#[test]
fn exploding_learning_rate_is_a_numeric_failure() {
    let f = Fixture::new(60);
    let (records, ckpt) = (f.arg("records.jsonl"), f.arg("m.ckpt"));
    let mut args = vec![
        "train",
        "--records",
        &records,
        "--fallback-embeddings",
        "--checkpoint",
        &ckpt,
        "--lr",
        "1e200",
        "--no-skipgram-init",
    ];
    args.extend_from_slice(QUICK);
    let o = claimdet(&args);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn config_file_flags_and_env_fallback() {
    let f = Fixture::new(30);
    f.write_gold_predictions();
    let cfg = f.path("run.conf");
    fs::write(
        &cfg,
        format!("# eval run\npred = {}\ngold = {}\n", f.arg("pred.jsonl"), f.arg("records.jsonl")),
    )
    .unwrap();
    let o = claimdet(&["eval", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = claimdet_env(&["eval"], Some(&cfg));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    // a flag overrides the file value
    let o = claimdet_env(&["eval", "--gold", &f.arg("absent.jsonl")], Some(&cfg));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("absent.jsonl"));

    fs::write(&cfg, "colour = blue\n").unwrap();
    let o = claimdet(&["eval", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("colour"));
}

#[test]
fn kappa_from_matrix_and_annotations() {
    let o = claimdet(&["kappa", "--matrix", "301,47,64,550"]);
    assert_eq!(o.status.code(), Some(0));
    assert!((stdout_json(&o)["kappa"].as_f64().unwrap() - 0.752742748908226).abs() < 1e-12);

    let dir = TempDir::new().unwrap();
    let ann = dir.path().join("ann.jsonl");
    fs::write(&ann, "[1, 1, 0]\n[0, 0, 0]\n[1, \"x\", 1]\n[0, 1, 1]\n").unwrap();
    let o = claimdet(&["kappa", "--annotations", ann.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = stdout_json(&o);
    assert_eq!(v["items"], 4);
    assert_eq!(v["annotators"], 3);
    assert_eq!(v["majority"]["claim"], 3);
    assert_eq!(v["majority"]["non_claim"], 1);
}

#[test]
fn preprocess_fixture_and_rerun_is_identical() {
    let data = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data");
    let dir = TempDir::new().unwrap();
    let run = |out: &Path| {
        claimdet(&[
            "preprocess",
            "--input",
            &format!("{data}/raw_tweets.txt"),
            "--dict",
            &format!("{data}/dict.tsv"),
            "--output",
            out.to_str().unwrap(),
        ])
    };
    let (a, b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    assert_eq!(run(&a).status.code(), Some(0));
    assert_eq!(run(&b).status.code(), Some(0));
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 45);
    assert_eq!(lines[0]["id"], "line-1");
    for l in &lines {
        let t = l["text"].as_str().unwrap();
        assert!(t.is_ascii() && !t.contains("http") && !t.split(' ').any(|w| w.starts_with('#')), "{t}");
    }
}

#[test]
fn stats_and_vocab_subcommands() {
    let f = Fixture::new(90);
    let o = claimdet(&["stats", "--records", &f.arg("records.jsonl"), "--seed", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = stdout_json(&o);
    assert_eq!(v["total"]["records"], 90);
    let parts = v["by_split"].as_object().unwrap();
    assert_eq!(parts.len(), 3);

    let o = claimdet(&["build-vocab", "--records", &f.arg("records.jsonl"), "--k", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = stdout_json(&o);
    assert_eq!(v["pos"]["k"], 2);
    assert_eq!(v["dep"]["k"], 3);
    assert_eq!(v["pos"]["entries"][0]["ngram"][0], "<UNK>");
}

#[test]
fn skipgram_files_are_written_and_reproducible() {
    let f = Fixture::new(120);
    let run = |tag: &str| {
        let o = claimdet(&[
            "train-skipgram",
            "--records",
            &f.arg("records.jsonl"),
            "--pos-out",
            &f.arg(&format!("pos{tag}.emb")),
            "--dep-out",
            &f.arg(&format!("dep{tag}.emb")),
            "--viewpoint",
            "noisy",
            "--seed",
            "5",
            "--skipgram-epochs",
            "2",
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    };
    run("1");
    run("2");
    let pos = fs::read_to_string(f.path("pos1.emb")).unwrap();
    assert!(pos.starts_with("LESAPOS1 3 20 "));
    assert!(fs::read_to_string(f.path("dep1.emb")).unwrap().starts_with("LESADEP1 3 20 "));
    assert_eq!(pos, fs::read_to_string(f.path("pos2.emb")).unwrap());
    assert_eq!(fs::read(f.path("dep1.emb")).unwrap(), fs::read(f.path("dep2.emb")).unwrap());
}

#[test]
fn pretrain_train_predict_pipeline_is_deterministic() {
    let f = Fixture::new(150);
    f.write_embeddings(0);
    let records = f.arg("records.jsonl");
    let emb = f.arg("sentences.emb");
    let pretrain = |tag: &str| {
        let mut args = vec![
            "pretrain".to_string(),
            "--records".into(),
            records.clone(),
            "--checkpoint".into(),
            f.arg(&format!("pre{tag}.ckpt")),
            "--report".into(),
            f.arg(&format!("pre{tag}.json")),
            "--seed".into(),
            "4".into(),
        ];
        args.extend(QUICK.iter().map(|s| s.to_string()));
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let o = claimdet(&args);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(o.stdout.is_empty());
    };
    let train = |tag: &str| {
        let mut args = vec![
            "train".to_string(),
            "--records".into(),
            records.clone(),
            "--embeddings".into(),
            emb.clone(),
            "--init".into(),
            f.arg("pre1.ckpt"),
            "--checkpoint".into(),
            f.arg(&format!("m{tag}.ckpt")),
            "--history".into(),
            f.arg(&format!("h{tag}.jsonl")),
            "--seed".into(),
            "4".into(),
        ];
        args.extend(QUICK.iter().map(|s| s.to_string()));
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let o = claimdet(&args);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        o.stdout
    };
    pretrain("1");
    pretrain("2");
    assert_eq!(fs::read(f.path("pre1.ckpt")).unwrap(), fs::read(f.path("pre2.ckpt")).unwrap());
    assert_eq!(fs::read(f.path("pre1.json")).unwrap(), fs::read(f.path("pre2.json")).unwrap());
    let r1 = train("1");
    let r2 = train("2");
    assert_eq!(r1, r2);
    assert_eq!(fs::read(f.path("m1.ckpt")).unwrap(), fs::read(f.path("m2.ckpt")).unwrap());
    assert_eq!(fs::read_to_string(f.path("h1.jsonl")).unwrap().lines().count(), 2);
    let report: Value = serde_json::from_slice(&r1).unwrap();
    assert_eq!(report["seed"], 4);

    let model = f.arg("m1.ckpt");
    let predict = |extra: &[&str]| {
        let mut args = vec!["predict", "--checkpoint", &model, "--records", &records, "--embeddings", &emb];
        args.extend_from_slice(extra);
        claimdet(&args)
    };
    let single = predict(&["--threads", "1"]);
    let multi = predict(&["--threads", "3"]);
    assert_eq!(single.status.code(), Some(0), "{}", stderr(&single));
    assert_eq!(single.stdout, multi.stdout);
    let lines: Vec<Value> = String::from_utf8(single.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), f.records.len());
    for l in &lines {
        let p: Vec<f64> = serde_json::from_value(l["probs"].clone()).unwrap();
        assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
        assert_eq!(l["attention"]["pos_views"].as_array().unwrap().len(), 3);
        assert!(l["hints"].is_array());
        let _: Label = serde_json::from_value(l["label"].clone()).unwrap();
    }

    let forced = predict(&["--force-branch", "semantic"]);
    assert_eq!(forced.status.code(), Some(0));
    let first: Value = serde_json::from_str(String::from_utf8(forced.stdout).unwrap().lines().next().unwrap()).unwrap();
    assert_eq!(first["attention"]["branches"], serde_json::json!([0.0, 0.0, 1.0]));

    let mismatch = predict(&["--k", "2"]);
    assert_eq!(mismatch.status.code(), Some(2));
    assert!(stderr(&mismatch).contains("k=3"));
    let same = predict(&["--k", "3", "--dropout", "0.1"]);
    assert_eq!(same.status.code(), Some(0), "{}", stderr(&same));
    assert_eq!(predict(&["--force-branch", "syntax"]).status.code(), Some(1));
}
