//! CLI contract: exit codes, file outputs, and manifest reproducibility.

use std::path::{Path, PathBuf};
use std::process::Command;

use tweetopic_cli::{cmd_run, GridChoice, RunSpec};
use tweetopic_core::pipeline::FeatureKind;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tweetopic"))
}

fn write_toy_csv(dir: &Path) -> PathBuf {
    let mut rows = vec!["id,text,label".to_string()];
    let classes = [
        ("Sports", ["match", "goal", "team"]),
        ("Politics", ["vote", "bill", "senate"]),
    ];
    let fillers = ["the", "big", "new", "old"];
    let mut i = 0;
    for (label, words) in classes {
        for n in 0..15 {
            rows.push(format!(
                "t{i},{} {} {},{label}",
                words[n % 3],
                fillers[n % 4],
                words[(n + 1) % 3]
            ));
            i += 1;
        }
    }
    let path = dir.join("toy.csv");
    std::fs::write(&path, rows.join("\n") + "\n").unwrap();
    path
}

#[test]
fn missing_file_exits_2() {
    let out = bin()
        .args(["stats", "--data", "/nonexistent/nope.csv"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

#[test]
fn empty_file_exits_2_with_no_records() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("empty.csv");
    std::fs::write(&p, "id,text,label\n").unwrap();
    let out = bin().args(["stats", "--data"]).arg(&p).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("no records"), "{stderr}");
}

#[test]
fn unknown_format_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_toy_csv(dir.path());
    let out = bin()
        .args(["stats", "--format", "parquet", "--data"])
        .arg(&data)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4), "{out:?}");
}

#[test]
fn unknown_model_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_toy_csv(dir.path());
    let out = bin()
        .args(["run", "--model", "svm", "--out"])
        .arg(dir.path().join("out"))
        .arg("--data")
        .arg(&data)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4), "{out:?}");
}

#[test]
fn uninstalled_checkpoint_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_toy_csv(dir.path());
    let out = bin()
        .args(["run", "--model", "stf:all-roberta-large-v1", "--out"])
        .arg(dir.path().join("out"))
        .arg("--data")
        .arg(&data)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{out:?}");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("not installed"), "{stderr}");
}

#[test]
fn neural_without_embeddings_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_toy_csv(dir.path());
    let out = bin()
        .args(["run", "--model", "cnn", "--out"])
        .arg(dir.path().join("out"))
        .arg("--data")
        .arg(&data)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4), "{out:?}");
}

#[test]
fn too_few_class_members_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("tiny.csv");
    std::fs::write(
        &p,
        "id,text,label\nt1,alpha,one\nt2,alpha,one\nt3,bravo,two\nt4,alpha,one\nt5,alpha,one\nt6,alpha,one\n",
    )
    .unwrap();
    let out = bin()
        .args(["run", "--model", "mnb", "--k", "5", "--out"])
        .arg(dir.path().join("out"))
        .arg("--data")
        .arg(&p)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

#[test]
fn preprocess_writes_jsonl_records() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("tweets.csv");
    std::fs::write(
        &p,
        "id,text,label\nt1,#ILoveComputerScience,Tech\nt2,go go go go,Sports\n",
    )
    .unwrap();
    let out_path = dir.path().join("tokens.jsonl");
    let out = bin()
        .args(["preprocess", "--in"])
        .arg(&p)
        .arg("--out")
        .arg(&out_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let body = std::fs::read_to_string(&out_path).unwrap();
    let lines: Vec<&str> = body.lines().collect();
    assert_eq!(lines.len(), 2);
    let first: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
    assert_eq!(first["tokens"][0], "<hashtag>");
    assert_eq!(first["empty"], false);
    let second: serde_json::Value = serde_json::from_str(lines[1]).unwrap();
    assert_eq!(second["tokens"][0], "<repeated>");
}

#[test]
fn grid_subcommands_work() {
    let out = bin().args(["grid", "list"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("mnb") && stdout.contains("22"), "{stdout}");

    let out = bin().args(["grid", "show", "lr"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("class_weight"), "{stdout}");
}

#[test]
fn runs_are_reproducible_from_spec_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_toy_csv(dir.path());

    let mut spec = RunSpec::new(&data, "mnb", dir.path().join("run1"));
    spec.features = FeatureKind::Bow;
    spec.grid = GridChoice::Default;
    spec.k = 3;
    spec.seed = 9;
    let s1 = cmd_run(&spec).unwrap();

    let mut spec2 = spec.clone();
    spec2.output_dir = dir.path().join("run2");
    let s2 = cmd_run(&spec2).unwrap();

    let r1 = std::fs::read(dir.path().join("run1/results.jsonl")).unwrap();
    let r2 = std::fs::read(dir.path().join("run2/results.jsonl")).unwrap();
    assert_eq!(r1, r2, "same spec, same seed: byte-identical results");
    assert_eq!(s1.best.mean_accuracy, s2.best.mean_accuracy);

    // Re-running from the recorded manifest reproduces the bytes too.
    let s3 = tweetopic_cli::cmd_run_from_manifest(
        &dir.path().join("run1/manifest.json"),
        Some(&dir.path().join("run3")),
    )
    .unwrap();
    let r3 = std::fs::read(dir.path().join("run3/results.jsonl")).unwrap();
    assert_eq!(r1, r3, "manifest re-run must re-emit byte-identical results");
    assert_eq!(s1.results.len(), s3.results.len());

    // Manifests differ only in output dir and timestamp.
    let m1: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("run1/manifest.json")).unwrap())
            .unwrap();
    let m3: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("run3/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(m1["fold_assignment_hash"], m3["fold_assignment_hash"]);
    assert_eq!(m1["dataset_sha256"], m3["dataset_sha256"]);
    assert_eq!(m1["preprocess_config_hash"], m3["preprocess_config_hash"]);
}

#[test]
fn compare_rejects_mismatched_fold_hashes() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_toy_csv(dir.path());

    let mut spec = RunSpec::new(&data, "mnb", dir.path().join("a"));
    spec.k = 3;
    spec.seed = 1;
    cmd_run(&spec).unwrap();
    let mut spec2 = RunSpec::new(&data, "lr", dir.path().join("b"));
    spec2.k = 3;
    spec2.seed = 2; // different folds
    cmd_run(&spec2).unwrap();

    let out = bin()
        .args(["compare", "--baseline", "mnb-bow"])
        .arg(dir.path().join("a"))
        .arg(dir.path().join("b"))
        .output()
        .unwrap();
    assert_ne!(out.status.code(), Some(0));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("not comparable"), "{stderr}");
}

#[test]
fn compare_with_itself_reports_p_one() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_toy_csv(dir.path());
    let mut spec = RunSpec::new(&data, "mnb", dir.path().join("a"));
    spec.k = 3;
    cmd_run(&spec).unwrap();
    let out = bin()
        .args(["compare", "--baseline", "mnb-bow"])
        .arg(dir.path().join("a"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("1.0000"), "self-comparison p-value must be 1: {stdout}");
    assert!(!stdout.contains("mnb-bow*"), "no asterisk against itself: {stdout}");
}

#[test]
fn report_reemits_from_results() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_toy_csv(dir.path());
    let mut spec = RunSpec::new(&data, "mnb", dir.path().join("a"));
    spec.k = 3;
    let s = cmd_run(&spec).unwrap();
    let out = bin()
        .args(["report", "--dir"])
        .arg(dir.path().join("a"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.trim(), s.report.markdown.trim());
}
