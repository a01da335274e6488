//! End-to-end tests driving the compiled binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn etdtag(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_etdtag"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = etdtag(args, dir);
    assert!(
        out.status.success(),
        "etdtag {args:?} failed:\n{}\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// synth -> train -> tag -> eval -> baseline -> compare, small scale.
fn run_pipeline(dir: &Path, seed: &str) {
    ok(&["synth", "--out", "corpus", "--docs", "36", "--seed", seed], dir);
    ok(
        &[
            "train", "--corpus", "corpus", "--model-out", "text.json", "--epochs", "8",
            "--seed", seed,
        ],
        dir,
    );
    ok(
        &[
            "train", "--corpus", "corpus", "--model-out", "visual.json", "--visual",
            "--epochs", "8", "--seed", seed,
        ],
        dir,
    );
    ok(
        &[
            "tag", "--corpus", "corpus", "--model", "visual.json", "--split", "test",
            "--out", "preds.json", "--seed", seed,
        ],
        dir,
    );
    ok(
        &[
            "eval", "--corpus", "corpus", "--pred", "preds.json", "--split", "test",
            "--report", "report.json", "--seed", seed,
        ],
        dir,
    );
    ok(
        &[
            "baseline", "--corpus", "corpus", "--split", "test", "--out", "base.json",
            "--seed", seed,
        ],
        dir,
    );
    ok(
        &[
            "eval", "--corpus", "corpus", "--pred", "base.json", "--split", "test",
            "--report", "base-report.json", "--seed", seed,
        ],
        dir,
    );
    ok(
        &[
            "compare", "--report", "heuristic=base-report.json", "--report",
            "crf-visual=report.json", "--out", "comparison.json",
        ],
        dir,
    );
}

#[test]
fn full_pipeline_produces_reports() {
    let dir = tempfile::tempdir().unwrap();
    run_pipeline(dir.path(), "42");

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    let fields = report["fields"].as_object().unwrap();
    assert_eq!(fields.len(), 7);
    for key in ["title", "author", "degree", "program", "institution", "year", "advisor"] {
        assert!(fields.contains_key(key), "missing field {key}");
        assert!(fields[key]["f1"].is_number());
    }
    assert!(report["macro_f1"].is_number());
    assert!(report["config_hash"].is_string());

    let comparison: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("comparison.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(comparison["models"].as_array().unwrap().len(), 2);
    assert_eq!(comparison["rows"].as_array().unwrap().len(), 8);
}

#[test]
fn same_seed_gives_byte_identical_reports() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_pipeline(a.path(), "7");
    run_pipeline(b.path(), "7");
    let report_a = std::fs::read(a.path().join("report.json")).unwrap();
    let report_b = std::fs::read(b.path().join("report.json")).unwrap();
    assert_eq!(report_a, report_b);

    let preds_a = std::fs::read(a.path().join("preds.json")).unwrap();
    let preds_b = std::fs::read(b.path().join("preds.json")).unwrap();
    assert_eq!(preds_a, preds_b);
}

#[test]
fn eval_with_perfect_predictions_scores_one() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["synth", "--out", "corpus", "--docs", "10", "--seed", "3"], dir.path());

    // Build a prediction file straight from the ground-truth records.
    let mut preds = Vec::new();
    let mut doc_ids: Vec<PathBuf> = std::fs::read_dir(dir.path().join("corpus"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    doc_ids.sort();
    for doc_dir in doc_ids {
        let gt: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(doc_dir.join("gt.json")).unwrap())
                .unwrap();
        let mut obj = gt.as_object().unwrap().clone();
        obj.insert(
            "doc_id".into(),
            serde_json::Value::String(
                doc_dir.file_name().unwrap().to_string_lossy().into_owned(),
            ),
        );
        preds.push(serde_json::Value::Object(obj));
    }
    std::fs::write(
        dir.path().join("preds.json"),
        serde_json::to_string_pretty(&preds).unwrap(),
    )
    .unwrap();

    let stdout = ok(
        &[
            "eval", "--corpus", "corpus", "--pred", "preds.json", "--split", "all",
            "--threshold", "1.0", "--report", "report.json", "--seed", "3",
        ],
        dir.path(),
    );
    assert!(stdout.contains("macro"), "{stdout}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["macro_f1"].as_f64().unwrap(), 1.0);
    for (_, prf) in report["fields"].as_object().unwrap() {
        assert_eq!(prf["f1"].as_f64().unwrap(), 1.0);
    }
}

#[test]
fn ingest_align_featurize_write_expected_files() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["synth", "--out", "corpus", "--docs", "4", "--seed", "5"], dir.path());

    let stdout = ok(&["ingest", "--corpus", "corpus"], dir.path());
    assert!(stdout.contains("4 ocr.txt written"), "{stdout}");
    assert!(dir.path().join("corpus/doc_0000/ocr.txt").is_file());

    ok(&["align", "--corpus", "corpus"], dir.path());
    let sidecar: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("corpus/doc_0000/aligned.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(sidecar["doc_id"], "doc_0000");
    let tokens = sidecar["tokens"].as_array().unwrap();
    assert!(!tokens.is_empty());
    assert_eq!(tokens[0]["bbox"].as_array().unwrap().len(), 4);

    ok(
        &["featurize", "--corpus", "corpus", "--out", "features.tsv", "--visual"],
        dir.path(),
    );
    let dump = std::fs::read_to_string(dir.path().join("features.tsv")).unwrap();
    let blocks: Vec<&str> = dump.split("\n\n").collect();
    assert_eq!(blocks.len(), 4, "one blank-separated block per document");
    let first_row = dump.lines().next().unwrap();
    assert_eq!(first_row.split('\t').count(), 15, "token + label + 13 features");
}

#[test]
fn config_file_applies_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.toml"),
        "seed = 9\nepochs = 2\nbatch_size = 4\nvisual = true\n",
    )
    .unwrap();
    ok(&["synth", "--out", "corpus", "--docs", "8", "--config", "run.toml"], dir.path());
    ok(
        &[
            "train", "--corpus", "corpus", "--model-out", "model.json", "--config", "run.toml",
            "--split", "all",
        ],
        dir.path(),
    );
    let model: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("model.json")).unwrap())
            .unwrap();
    assert_eq!(model["hyperparams"]["epochs"], 2);
    assert_eq!(model["hyperparams"]["batch_size"], 4);
    assert_eq!(model["hyperparams"]["seed"], 9);
    assert_eq!(model["format_version"], 1);
    let hash = model["config_hash"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    // Visual features made it into the dictionary.
    let features = model["features"].as_array().unwrap();
    assert!(features.iter().any(|f| f.as_str().unwrap().starts_with("upper_y=")));

    // A flag overrides the file: --seed beats the config seed.
    ok(
        &[
            "train", "--corpus", "corpus", "--model-out", "model2.json", "--config", "run.toml",
            "--split", "all", "--seed", "11",
        ],
        dir.path(),
    );
    let model2: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("model2.json")).unwrap())
            .unwrap();
    assert_eq!(model2["hyperparams"]["seed"], 11);
    assert_ne!(model2["config_hash"].as_str().unwrap(), hash);
}

#[test]
fn failures_exit_nonzero_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();

    let out = etdtag(&["--no-such-flag"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    let out = etdtag(&["train", "--corpus", "missing", "--model-out", "m.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));

    ok(&["synth", "--out", "corpus", "--docs", "4", "--seed", "1"], dir.path());
    let out = etdtag(
        &[
            "eval", "--corpus", "corpus", "--pred", "a.json", "--model", "b.json",
            "--split", "all",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("exactly one"));
}
