//! End-to-end checks of the command-line interface.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn isconna(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isconna"))
        .args(args)
        .env_remove("ISCONNA_SEED")
        .output()
        .expect("binary runs")
}

fn synth_small(dir: &Path) -> (String, String) {
    let data = dir.join("stream.csv").display().to_string();
    let labels = dir.join("labels.txt").display().to_string();
    let out = isconna(&[
        "synth",
        "--output",
        &data,
        "--labels-out",
        &labels,
        "--types",
        "8",
        "--horizon",
        "120",
        "--base-rate",
        "4",
        "--width",
        "120",
        "--gap",
        "1",
        "--seed",
        "9",
        "--inject",
        "burst:2:60:50",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    (data, labels)
}

#[test]
fn score_then_eval_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let (data, labels) = synth_small(dir.path());
    let scores = dir.path().join("scores.txt").display().to_string();

    let out = isconna(&[
        "score", "--input", &data, "--output", &scores, "--beta", "0", "--gamma", "0",
    ]);
    assert!(out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("records/sec"), "missing summary: {stderr}");
    assert!(stderr.contains("# score variant=eo"), "missing config echo");

    let n_records = fs::read_to_string(&data).unwrap().lines().count();
    let n_scores = fs::read_to_string(&scores).unwrap().lines().count();
    assert_eq!(n_records, n_scores);

    let out = isconna(&["eval", "--scores", &scores, "--labels", &labels]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let value: f64 = stdout.trim().parse().expect("single decimal");
    assert!(stdout.trim().len() == 6, "four decimals: {stdout:?}");
    assert!(value > 0.9, "burst should be found, got {value}");
}

#[test]
fn eval_writes_roc_points() {
    let dir = tempfile::tempdir().unwrap();
    let scores = dir.path().join("s.txt");
    let labels = dir.path().join("l.txt");
    fs::write(&scores, "0.9\n0.1\n0.8\n0.4\n").unwrap();
    fs::write(&labels, "1\n0\n0\n1\n").unwrap();
    let roc = dir.path().join("roc.csv");
    let out = isconna(&[
        "eval",
        "--scores",
        scores.to_str().unwrap(),
        "--labels",
        labels.to_str().unwrap(),
        "--roc-out",
        roc.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "0.7500");
    let roc_body = fs::read_to_string(&roc).unwrap();
    assert!(roc_body.starts_with("fpr,tpr\n0,0\n"));
    assert!(roc_body.trim_end().ends_with("1,1"));
}

#[test]
fn flag_column_appears_in_threshold_mode() {
    let dir = tempfile::tempdir().unwrap();
    let (data, _) = synth_small(dir.path());
    let scores = dir.path().join("scores.txt").display().to_string();
    let out = isconna(&[
        "score", "--input", &data, "--output", &scores, "--epsilon", "0.1", "--delta", "0.05",
    ]);
    assert!(out.status.success());
    let body = fs::read_to_string(&scores).unwrap();
    for line in body.lines() {
        let mut parts = line.split(' ');
        parts.next().unwrap().parse::<f64>().expect("score");
        let flag = parts.next().expect("flag column");
        assert!(flag == "0" || flag == "1");
        assert!(parts.next().is_none());
    }
    // The planted x50 burst must trip the threshold somewhere.
    assert!(body.lines().any(|l| l.ends_with(" 1")), "no flags fired");
}

#[test]
fn usage_errors_exit_2() {
    let out = isconna(&["score", "--input", "x.csv", "--output", "y.txt", "--zeta", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    let out = isconna(&["score", "--input", "x.csv", "--output", "y.txt", "--epsilon", "0.1"]);
    assert_eq!(out.status.code(), Some(2), "epsilon without delta");
    let out = isconna(&["bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn data_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = isconna(&[
        "score",
        "--input",
        dir.path().join("missing.csv").to_str().unwrap(),
        "--output",
        dir.path().join("out.txt").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "a,b,c\n").unwrap();
    let out = isconna(&[
        "score",
        "--input",
        bad.to_str().unwrap(),
        "--output",
        dir.path().join("out.txt").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));

    let scores = dir.path().join("s.txt");
    let labels = dir.path().join("l.txt");
    fs::write(&scores, "1.0\n2.0\n").unwrap();
    fs::write(&labels, "0\n").unwrap();
    let out = isconna(&[
        "eval",
        "--scores",
        scores.to_str().unwrap(),
        "--labels",
        labels.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));

    let out = isconna(&[
        "synth",
        "--output",
        dir.path().join("d.csv").to_str().unwrap(),
        "--labels-out",
        dir.path().join("l2.txt").to_str().unwrap(),
        "--inject",
        "explode:0:1:2",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn seed_env_fallback_matches_explicit_flag() {
    let dir = tempfile::tempdir().unwrap();
    let (data, _) = synth_small(dir.path());
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");

    let out = Command::new(env!("CARGO_BIN_EXE_isconna"))
        .args(["score", "--input", &data, "--output", a.to_str().unwrap(), "--seed", "1234"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let out = Command::new(env!("CARGO_BIN_EXE_isconna"))
        .args(["score", "--input", &data, "--output", b.to_str().unwrap()])
        .env("ISCONNA_SEED", "1234")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn sweep_emits_full_grid() {
    let dir = tempfile::tempdir().unwrap();
    let (data, labels) = synth_small(dir.path());
    let out_csv = dir.path().join("sweep.csv").display().to_string();
    let out = isconna(&[
        "sweep", "--input", &data, "--labels", &labels, "--output", &out_csv,
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let body = fs::read_to_string(&out_csv).unwrap();
    let mut lines = body.lines();
    assert_eq!(
        lines.next().unwrap(),
        "variant,alpha,beta,gamma,zeta,rows,cols,auroc"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 24);
    assert_eq!(rows.iter().filter(|r| r.starts_with("eo,")).count(), 12);
    assert_eq!(rows.iter().filter(|r| r.starts_with("en,")).count(), 12);
    for row in rows {
        let auc: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
        assert!((0.0..=1.0).contains(&auc));
    }
}

#[test]
fn sweep_rows_match_standalone_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (data, labels) = synth_small(dir.path());
    let out_csv = dir.path().join("sweep.csv").display().to_string();
    let out = isconna(&["sweep", "--input", &data, "--labels", &labels, "--output", &out_csv]);
    assert!(out.status.success());
    let body = fs::read_to_string(&out_csv).unwrap();
    let row = body
        .lines()
        .find(|l| l.starts_with("eo,1,1,0.5,0.7,"))
        .expect("grid row present");
    let sweep_auc: f64 = row.rsplit(',').next().unwrap().parse().unwrap();

    let scores = dir.path().join("one.txt").display().to_string();
    let out = isconna(&[
        "score", "--input", &data, "--output", &scores, "--alpha", "1", "--beta", "1",
        "--gamma", "0.5", "--zeta", "0.7",
    ]);
    assert!(out.status.success());
    let out = isconna(&["eval", "--scores", &scores, "--labels", &labels]);
    let standalone: f64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
    assert!((sweep_auc - standalone).abs() < 5e-5, "{sweep_auc} vs {standalone}");
}
