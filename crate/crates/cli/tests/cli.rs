use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_graphsmooth"))
}

fn run(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("spawn graphsmooth");
    assert!(
        out.status.success(),
        "graphsmooth {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes a small mixture and returns `(embeddings, labels)`.
fn synth(dir: &Path, name: &str, seed: u64) -> (PathBuf, PathBuf) {
    let emb = dir.join(format!("{name}.bin"));
    let lab = dir.join(format!("{name}.txt"));
    let seed = seed.to_string();
    run(&[
        "synth",
        "--n",
        "200",
        "--d",
        "16",
        "--k",
        "4",
        "--seed",
        &seed,
        "--embeddings",
        s(&emb),
        "--labels",
        s(&lab),
    ]);
    (emb, lab)
}

fn pipeline(emb: &Path, lab: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "pipeline",
        "--embeddings",
        s(emb),
        "--labels",
        s(lab),
        "--runs",
        "3",
        "--out",
        s(out),
    ];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn pipeline_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let (emb, lab) = synth(dir.path(), "toy", 1);
    let out = dir.path().join("run");
    let output = pipeline(&emb, &lab, &out, &["--dump-graph"]);
    assert!(String::from_utf8_lossy(&output.stdout).contains("wrote 30 records"));
    assert!(String::from_utf8_lossy(&output.stderr).contains("--strict-dgc"));
    for name in [
        "report.json",
        "report.csv",
        "report.md",
        "metadata.json",
        "significance.json",
        "adjacency.mtx",
        "operator.mtx",
    ] {
        assert!(out.join(name).is_file(), "missing {name}");
    }
    let report: Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let records = report.as_array().unwrap();
    assert_eq!(records.len(), 30);
    assert!(records.iter().all(|r| r["dataset"] == "toy"));
    let metadata: Value =
        serde_json::from_str(&fs::read_to_string(out.join("metadata.json")).unwrap()).unwrap();
    assert_eq!(metadata["knn"], 10);
    assert_eq!(metadata["runs"], 3);
    let md = fs::read_to_string(out.join("report.md")).unwrap();
    assert!(md.contains("### cluster / ari") && md.contains("| dgc |"));
}

#[test]
fn repeated_pipeline_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (emb, lab) = synth(dir.path(), "toy", 2);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let extra = [
        "--task",
        "both",
        "--grid-knn",
        "5,10",
        "--grid-l2",
        "1e-4,1e-2",
        "--grid-tee",
        "1,2",
    ];
    pipeline(&emb, &lab, &a, &extra);
    let single_thread = bin()
        .env("GRAPHSMOOTH_THREADS", "1")
        .args([
            "pipeline",
            "--embeddings",
            s(&emb),
            "--labels",
            s(&lab),
            "--runs",
            "3",
            "--out",
            s(&b),
        ])
        .args(extra)
        .output()
        .unwrap();
    assert!(single_thread.status.success());
    for name in ["report.json", "significance.json", "report.md"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn strict_dgc_rejects_large_steps() {
    let dir = tempfile::tempdir().unwrap();
    let (emb, lab) = synth(dir.path(), "toy", 3);
    let out = bin()
        .args([
            "pipeline",
            "--embeddings",
            s(&emb),
            "--labels",
            s(&lab),
            "--strict-dgc",
        ])
        .args(["--out", s(&dir.path().join("x"))])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("T/P = 5/2 exceeds 1"), "{err}");
}

#[test]
fn smooth_cluster_and_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let (emb, lab) = synth(dir.path(), "toy", 4);
    let smoothed = dir.path().join("smooth.csv");
    let mtx = dir.path().join("s.mtx");
    let out = run(&[
        "smooth",
        "--embeddings",
        s(&emb),
        "--filter",
        "s2gc",
        "--out",
        s(&smoothed),
        "--dump-operator",
        s(&mtx),
    ]);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("s2gc: 200 x 16"));
    assert_eq!(fs::read_to_string(&smoothed).unwrap().lines().count(), 200);
    assert!(fs::read_to_string(&mtx)
        .unwrap()
        .starts_with("%%MatrixMarket matrix coordinate real symmetric"));

    let pred = dir.path().join("pred.txt");
    let out = run(&[
        "cluster",
        "--embeddings",
        s(&smoothed),
        "--k",
        "4",
        "--runs",
        "3",
        "--out",
        s(&pred),
    ]);
    let lines: Vec<Value> = String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(
        lines
            .iter()
            .map(|l| l["seed"].as_u64().unwrap())
            .collect::<Vec<_>>(),
        vec![42, 43, 44]
    );
    for r in 0..3 {
        let path = dir.path().join(format!("pred.{r}.txt"));
        assert_eq!(fs::read_to_string(&path).unwrap().lines().count(), 200);
    }

    let first = dir.path().join("pred.0.txt");
    let out = run(&["evaluate", "--labels", s(&lab), "--predictions", s(&first)]);
    let scores: Value = serde_json::from_slice(&out.stdout).unwrap();
    for key in ["ami", "ari", "f1_macro"] {
        let v = scores[key].as_f64().unwrap();
        assert!((-1.0..=1.0).contains(&v), "{key} = {v}");
    }
    let out = run(&[
        "evaluate",
        "--labels",
        s(&lab),
        "--predictions",
        s(&lab),
        "--metric",
        "ari,ami",
    ]);
    let perfect: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(
        (perfect["ari"].as_f64(), perfect["ami"].as_f64()),
        (Some(1.0), Some(1.0))
    );
}

#[test]
fn classify_reports_f1_and_writes_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let (emb, lab) = synth(dir.path(), "toy", 5);
    let (pred, model) = (dir.path().join("pred.csv"), dir.path().join("model.bin"));
    let out = run(&[
        "classify",
        "--embeddings",
        s(&emb),
        "--labels",
        s(&lab),
        "--predictions",
        s(&pred),
        "--model",
        s(&model),
    ]);
    let scores: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(scores["test"], 40);
    assert!((0.0..=1.0).contains(&scores["f1_macro"].as_f64().unwrap()));
    let text = fs::read_to_string(&pred).unwrap();
    assert!(text.starts_with("index,true,predicted\n"));
    assert_eq!(text.lines().count(), 41);
    assert!(model.is_file());
}

#[test]
fn report_merge_and_rank_test() {
    let dir = tempfile::tempdir().unwrap();
    let mut reports = Vec::new();
    for (name, seed) in [("alpha", 6), ("beta", 7)] {
        let (emb, lab) = synth(dir.path(), name, seed);
        let out = dir.path().join(name);
        pipeline(&emb, &lab, &out, &[]);
        reports.push(out.join("report.json"));
    }

    let merged = dir.path().join("merged.md");
    run(&[
        "report",
        "--input",
        s(&reports[0]),
        "--input",
        s(&reports[1]),
        "--out",
        s(&merged),
    ]);
    let md = fs::read_to_string(&merged).unwrap();
    assert!(md.contains("| method | alpha | beta |"), "{md}");

    let csv = dir.path().join("merged.csv");
    run(&[
        "report",
        "--input",
        s(&reports[0]),
        "--input",
        s(&reports[1]),
        "--format",
        "csv",
        "--out",
        s(&csv),
    ]);
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 61);

    let sig = dir.path().join("sig");
    let out = run(&[
        "rank-test",
        "--report",
        s(&reports[0]),
        "--report",
        s(&reports[1]),
        "--out",
        s(&sig),
    ]);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("CD = "));
    let svg = fs::read_to_string(sig.join("cd_diagram.svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    let parsed: Value =
        serde_json::from_str(&fs::read_to_string(sig.join("significance.json")).unwrap()).unwrap();
    assert!(parsed["rank_test"].is_object());
}

#[test]
fn bad_inputs_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.bin");
    let out = bin()
        .args([
            "pipeline",
            "--embeddings",
            s(&missing),
            "--labels",
            s(&missing),
            "--out",
            s(dir.path()),
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("does not exist"));

    let out = bin()
        .env("GRAPHSMOOTH_THREADS", "0")
        .args(["synth", "--help"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let (emb, lab) = (dir.path().join("x.bin"), dir.path().join("y.txt"));
    let out = bin()
        .env("GRAPHSMOOTH_THREADS", "0")
        .args(["synth", "--embeddings", s(&emb), "--labels", s(&lab)])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr)
        .contains("GRAPHSMOOTH_THREADS must be a positive integer"));
}
