use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn transim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_transim"))
        .args(args)
        .env_remove("TRANSIM_CACHE_DIR")
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

fn error_kind(out: &Output) -> String {
    let line = String::from_utf8_lossy(&out.stderr)
        .lines()
        .last()
        .unwrap_or_default()
        .to_string();
    let v: Value = serde_json::from_str(&line).expect("structured error");
    v["error"]["kind"].as_str().expect("kind").to_string()
}

fn write_pairs(dir: &Path) -> PathBuf {
    let path = dir.join("pairs.jsonl");
    fs::write(
        &path,
        "{\"id\":\"same\",\"text_a\":\"w1 w2 w3\",\"text_b\":\"w1 w2 w3\"}\n{\"id\":\"apart\",\"text_a\":\"w1 w2\",\"text_b\":\"w5 w6\"}\n",
    )
    .unwrap();
    path
}

fn records(bytes: &[u8]) -> Vec<Value> {
    String::from_utf8_lossy(bytes)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn score_two_toy_pairs() {
    let tmp = tempfile::tempdir().unwrap();
    let input = write_pairs(tmp.path());
    let out = transim(&["score", s(&input), "--lang", "L1", "--measures", "nmt-direct"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let recs = records(&out.stdout);
    assert_eq!(recs.len(), 2);
    assert_eq!(recs[0]["id"], "same");
    assert_eq!(recs[0]["score"].as_f64().unwrap(), 1.0);
    let apart = recs[1]["score"].as_f64().unwrap();
    assert!((apart - 0.012345679).abs() < 1e-4, "{apart}");
    assert_eq!(
        recs[0]["signature"],
        "NMTScore-direct|model:toy|normalized|both-directions|v0.2.0|none"
    );
    let summary: Value = serde_json::from_str(String::from_utf8_lossy(&out.stderr).lines().last().unwrap()).unwrap();
    assert_eq!(summary["summary"]["pairs"], 2);
}

#[test]
fn score_flags_shape_the_signature() {
    let tmp = tempfile::tempdir().unwrap();
    let input = write_pairs(tmp.path());
    let out_path = tmp.path().join("scores.jsonl");
    let out = transim(&[
        "score",
        s(&input),
        "--lang",
        "L1",
        "--measures",
        "nmt-cross",
        "--tgt-lang",
        "L2",
        "--normalize",
        "off",
        "--direction",
        "a",
        "--out",
        s(&out_path),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let recs = records(&fs::read(&out_path).unwrap());
    assert_eq!(
        recs[0]["signature"],
        "NMTScore-cross|tgt-lang:L2|model:toy|unnormalized|a-given-b|v0.2.0|none"
    );
    let same = recs[0]["score"].as_f64().unwrap();
    assert!((same - 0.9).abs() < 1e-12, "{same}");
}

#[test]
fn empty_input_gives_empty_output() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("empty.jsonl");
    fs::write(&input, "").unwrap();
    let out = transim(&["score", s(&input), "--measures", "chrf"]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
}

#[test]
fn malformed_input_is_a_data_error() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("bad.jsonl");
    fs::write(&input, "{\"text_a\": 1}\n").unwrap();
    let out = transim(&["score", s(&input), "--measures", "chrf"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_kind(&out), "data");
}

#[test]
fn unreachable_endpoint_exits_with_backend_code_and_no_file() {
    let tmp = tempfile::tempdir().unwrap();
    let input = write_pairs(tmp.path());
    let out_path = tmp.path().join("scores.jsonl");
    let out = transim(&[
        "score",
        s(&input),
        "--lang",
        "L1",
        "--backend",
        "http://127.0.0.1:9",
        "--out",
        s(&out_path),
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(error_kind(&out), "backend");
    assert!(!out_path.exists());
    assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 1);
}

#[test]
fn several_measures_are_rejected_by_score() {
    let tmp = tempfile::tempdir().unwrap();
    let input = write_pairs(tmp.path());
    let out = transim(&["score", s(&input), "--measures", "chrf,bleu"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "config");
}

#[test]
fn benchmark_is_deterministic_with_a_singleton_cluster() {
    let tmp = tempfile::tempdir().unwrap();
    let config = fixtures().join("synthetic/benchmark.toml");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let out = transim(&["benchmark", "--config", s(&config), "--out", s(dir), "--reps", "300"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for f in ["report.json", "stats.json", "table.txt"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let stats: Value = serde_json::from_slice(&fs::read(a.join("stats.json")).unwrap()).unwrap();
    let scopes = stats["scopes"].as_array().unwrap();
    assert_eq!(scopes.len(), 3);
    for scope in scopes {
        assert_eq!(
            scope["cluster"],
            serde_json::json!(["nmt-direct"]),
            "{}",
            scope["scope"]
        );
        assert_eq!(scope["repetitions"], 300);
    }
    let report: Value = serde_json::from_slice(&fs::read(a.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 13);
    assert_eq!(report["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(report["loaded"].as_array().unwrap().len(), 3);
    let table = fs::read_to_string(a.join("table.txt")).unwrap();
    assert!(table.lines().any(|l| l.starts_with("nmt-direct") && l.contains('*')));
}

#[test]
fn seed_changes_only_the_resampling() {
    let tmp = tempfile::tempdir().unwrap();
    let config = fixtures().join("synthetic/benchmark.toml");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for (dir, seed) in [(&a, "1"), (&b, "2")] {
        let out = transim(&[
            "benchmark",
            "--config",
            s(&config),
            "--out",
            s(dir),
            "--reps",
            "100",
            "--seed",
            seed,
        ]);
        assert!(out.status.success());
    }
    assert_eq!(
        fs::read(a.join("table.txt")).unwrap(),
        fs::read(b.join("table.txt")).unwrap()
    );
    assert_ne!(
        fs::read(a.join("report.json")).unwrap(),
        fs::read(b.join("report.json")).unwrap()
    );
}

#[test]
fn normalization_ablation_adds_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let config = fixtures().join("synthetic/benchmark.toml");
    let out = transim(&[
        "benchmark",
        "--config",
        s(&config),
        "--out",
        s(tmp.path()),
        "--measures",
        "nmt-direct,nmt-cross",
        "--ablation",
        "normalize",
        "--reps",
        "100",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&fs::read(tmp.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(
        report["measures"],
        serde_json::json!([
            "nmt-direct",
            "nmt-direct-unnormalized",
            "nmt-cross",
            "nmt-cross-unnormalized"
        ])
    );
    let sigs = report["signatures"].as_object().unwrap();
    assert!(sigs["nmt-direct-unnormalized"]
        .as_str()
        .unwrap()
        .contains("|unnormalized|"));
}

#[test]
fn accuracy_dataset_without_validation_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let synthetic = fixtures().join("synthetic");
    let config = tmp.path().join("bench.toml");
    fs::write(
        &config,
        format!(
            "measures = [\"chrf\"]\n[[datasets]]\nname = \"syn-acc\"\nmetric = \"accuracy\"\ntest = \"{}\"\n",
            s(&synthetic.join("acc_test.toml"))
        ),
    )
    .unwrap();
    let out = transim(&["benchmark", "--config", s(&config)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "config");
    assert!(String::from_utf8_lossy(&out.stderr).contains("syn-acc"));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("bad.toml");
    fs::write(&config, "sead = 3\n").unwrap();
    let out = transim(&["benchmark", "--config", s(&config)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn metaeval_ranks_measures_and_excludes_flat_languages() {
    let tmp = tempfile::tempdir().unwrap();
    let config = fixtures().join("metaeval/metaeval.toml");
    let out = transim(&[
        "metaeval",
        "--config",
        s(&config),
        "--out",
        s(tmp.path()),
        "--reps",
        "200",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&fs::read(tmp.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["samples"], 84);
    let results = report["results"].as_array().unwrap();
    assert_eq!(results.len(), 9);
    let taus: Vec<f64> = results.iter().map(|r| r["mean_tau"].as_f64().unwrap()).collect();
    assert!(taus.windows(2).all(|w| w[0] >= w[1]), "{taus:?}");
    for r in results {
        assert_eq!(r["excluded"][0]["language"], "L2");
        assert_eq!(r["per_language"].as_array().unwrap().len(), 2);
        let (lo, hi, tau) = (
            r["low"].as_f64().unwrap(),
            r["high"].as_f64().unwrap(),
            r["mean_tau"].as_f64().unwrap(),
        );
        assert!(lo <= tau && tau <= hi && tau > 0.0);
    }

    // the hypothesis of the first sample equals its first reference
    let scores = fs::read_to_string(tmp.path().join("scores.jsonl")).unwrap();
    let first: Value = serde_json::from_str(scores.lines().next().unwrap()).unwrap();
    for key in ["nmt-direct/avg", "nmt-cross/hyp|ref", "nmt-cross/ref|hyp"] {
        assert_eq!(first["scores"][key].as_f64().unwrap(), 1.0, "{key}");
    }
}

#[test]
fn metaeval_with_boot_both_resampling() {
    let tmp = tempfile::tempdir().unwrap();
    let judgments = fixtures().join("metaeval/judgments.jsonl");
    let config = tmp.path().join("m.toml");
    fs::write(
        &config,
        "measures = [\"chrf\"]\nresample = \"samples_and_systems\"\nrepetitions = 100\n",
    )
    .unwrap();
    let out = transim(&[
        "metaeval",
        s(&judgments),
        "--config",
        s(&config),
        "--out",
        s(tmp.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&fs::read(tmp.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["resample"], "samples_and_systems");
    let g = &report["results"][0]["global"];
    assert!(g["low"].as_f64().unwrap() <= g["tau"].as_f64().unwrap());
}

#[test]
fn missing_criterion_is_a_data_error() {
    let tmp = tempfile::tempdir().unwrap();
    let judgments = fixtures().join("metaeval/judgments.jsonl");
    let out = transim(&[
        "metaeval",
        s(&judgments),
        "--measures",
        "chrf",
        "--criteria",
        "fluency",
        "--out",
        s(tmp.path()),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn shipped_schemas_parse_and_point_at_external_data() {
    let schemas = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../schemas");
    let mut count = 0;
    for entry in fs::read_dir(&schemas).unwrap() {
        let path = entry.unwrap().path();
        if path.file_name().unwrap().to_str().unwrap().starts_with("benchmark") {
            continue;
        }
        let spec = transim::datasets::DatasetSpec::from_file(&path).unwrap();
        assert!(spec.path.to_str().unwrap().contains("/../data/"), "{}", path.display());
        count += 1;
    }
    assert_eq!(count, 17);
    for config in ["benchmark.toml", "benchmark_crosslingual.toml"] {
        let out = transim(&["benchmark", "--config", s(&schemas.join(config)), "--backend", "toy"]);
        assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stderr).contains("cannot open"));
    }
}

#[test]
fn paired_datasets_are_scored_cross_lingually() {
    let tmp = tempfile::tempdir().unwrap();
    let config = fixtures().join("synthetic/crosslingual.toml");
    let out = transim(&[
        "benchmark",
        "--config",
        s(&config),
        "--out",
        s(tmp.path()),
        "--reps",
        "100",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&fs::read(tmp.path().join("report.json")).unwrap()).unwrap();
    let loaded = report["loaded"].as_array().unwrap();
    assert_eq!(loaded.len(), 2);
    for split in loaded {
        let rows = split["report"]["rows_read"].as_u64().unwrap();
        assert_eq!(split["paired"]["crosslingual"]["aligned_rows"].as_u64().unwrap(), rows);
        assert_eq!(split["paired"]["pairs"].as_u64().unwrap(), 2 * rows);
    }
    let table = fs::read_to_string(tmp.path().join("table.txt")).unwrap();
    let row = |m: &str| table.lines().find(|l| l.starts_with(m)).unwrap().to_string();
    assert!(row("nmt-pivot").contains("100.0"));
    assert!(row("chrf").contains("50.0"));
}
