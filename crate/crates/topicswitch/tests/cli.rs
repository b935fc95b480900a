//! Runs the installed binary the way a user would.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn topicswitch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_topicswitch"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL_ENCODER: [&str; 8] = ["--d-model", "32", "--n-heads", "4", "--n-layers", "1", "--d-ff", "64"];

#[test]
fn parse_prints_pairs_as_json_lines() {
    let out = topicswitch(&[
        "parse",
        fixture("apple_china_qa.txt").to_str().unwrap(),
        fixture("kroger_margin_qa.txt").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let lines: Vec<serde_json::Value> = stdout(&out).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["qa_pairs"][0]["analyst_name"], "Shannon Cross");
    assert_eq!(lines[1]["qa_pairs"][0]["analyst_name"], "Judah Frommer");
}

#[test]
fn parse_can_convert_between_formats() {
    let out = topicswitch(&[
        "parse",
        "--emit",
        "json",
        fixture("six_turn_operator.txt").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["turns"].as_array().unwrap().len(), 6);
    assert_eq!(v["turns"][0]["role"], "operator");
}

#[test]
fn study_writes_the_report_bundle_and_config_file_settings_apply() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = fixture("corpus20");
    let config = dir.path().join("run.toml");
    fs::write(
        &config,
        format!(
            "transcript_dir = {:?}\nprice_dir = {:?}\nsplit_date = \"2015-07-01\"\nlabel = \"relative\"\ntau = -0.004659\nseed = 3\nepochs = 50\n",
            corpus.join("transcripts"),
            corpus.join("prices")
        ),
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let mut args = vec![
        "study",
        "--config",
        config.to_str().unwrap(),
        "--output-dir",
        out_dir.to_str().unwrap(),
    ];
    args.extend(SMALL_ENCODER);
    // The flag wins over the file.
    args.extend(["--epochs", "80"]);
    let out = topicswitch(&args);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("Topic-Switching Index"));

    for name in [
        "index.csv",
        "labeled.csv",
        "regression.csv",
        "accuracy.csv",
        "index_manifest.json",
        "run_config.json",
    ] {
        assert!(out_dir.join(name).is_file(), "{name} missing");
    }
    let index = fs::read_to_string(out_dir.join("index.csv")).unwrap();
    assert_eq!(index.lines().count(), 21);
    let run: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("run_config.json")).unwrap()).unwrap();
    assert_eq!(run["train"]["epochs"], 80);
    assert_eq!(run["train"]["seed"], 3);
    assert_eq!(run["backend"]["d_model"], 32);
    assert_eq!(run["label_spec"]["kind"], "relative");
}

#[test]
fn index_subcommand_reports_counts() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = fixture("corpus20");
    let mut args = vec![
        "index".to_string(),
        "--transcript-dir".into(),
        corpus.join("transcripts").display().to_string(),
        "--output-dir".into(),
        dir.path().display().to_string(),
    ];
    args.extend(SMALL_ENCODER.map(String::from));
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let out = topicswitch(&args);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out).trim(), "indexed 20 of 20 calls");
}

#[test]
fn synth_writes_a_loadable_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec![
        "synth",
        "--out",
        dir.path().to_str().unwrap(),
        "--n-symbols",
        "2",
        "--first-year",
        "2018",
        "--last-year",
        "2018",
    ];
    args.extend(SMALL_ENCODER);
    let out = topicswitch(&args);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(fs::read_dir(dir.path().join("transcripts")).unwrap().count(), 8);
    assert_eq!(fs::read_dir(dir.path().join("prices")).unwrap().count(), 2);
    assert!(dir.path().join("planted.csv").is_file());
}

#[test]
fn errors_exit_non_zero_with_a_message() {
    let out = topicswitch(&["index", "--transcript-dir", "/definitely/not/here"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("/definitely/not/here"), "{}", stderr(&out));

    let out = topicswitch(&["study", "--n-heads", "5"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("invalid configuration"), "{}", stderr(&out));

    let out = topicswitch(&["study", "--no-such-flag"]);
    assert!(!out.status.success());
}
