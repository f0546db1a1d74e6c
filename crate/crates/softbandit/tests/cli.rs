//! End-to-end tests of the `softbandit` binary: outputs, exit codes, and
//! diagnostics.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_softbandit"))
}

#[test]
fn synthetic_run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let status = bin()
        .args(["run", "--synthetic", "small", "--policy", "random"])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("manifest.json").exists());
    assert!(out.join("aggregate.json").exists());
    let csvs = std::fs::read_dir(&out)
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .file_name()
                .to_string_lossy()
                .ends_with(".csv")
        })
        .count();
    assert!(csvs >= 1, "expected at least one trajectory CSV");
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["profile_source"], "synthetic:small");
    assert!(manifest["config_fingerprint"].as_str().unwrap().len() >= 16);
}

#[test]
fn missing_config_file_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let output = bin()
        .args(["run", "--synthetic", "small", "--config", "/nonexistent/config.json"])
        .arg("--out")
        .arg(dir.path().join("x"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(!output.stderr.is_empty());
}

#[test]
fn invalid_config_value_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(&config, r#"{"intrinsic_dim": 0}"#).unwrap();
    let output = bin()
        .args(["run", "--synthetic", "small"])
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(dir.path().join("x"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("intrinsic_dim"), "{stderr}");
}

#[test]
fn malformed_profile_record_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let profiles = dir.path().join("profiles.json");
    std::fs::write(
        &profiles,
        r#"[{"id":"ok","examples":[{"input":"a","gold":"b"}]},{"id":"bad","examples":[]}]"#,
    )
    .unwrap();
    let output = bin()
        .args(["run"])
        .arg("--profiles")
        .arg(&profiles)
        .arg("--out")
        .arg(dir.path().join("x"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("record 1"), "{stderr}");
}

#[test]
fn unreachable_endpoint_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let profiles = dir.path().join("profiles.json");
    std::fs::write(
        &profiles,
        r#"[{"id":"u","examples":[{"input":"a","gold":"b"}]}]"#,
    )
    .unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(
        &config,
        r#"{"intrinsic_dim": 4, "num_soft_tokens": 2, "token_dim": 3, "hidden_dim": 5, "total_iterations": 2, "candidate_pool_size": 10}"#,
    )
    .unwrap();
    let output = bin()
        .args(["run", "--endpoint", "http://127.0.0.1:1"])
        .arg("--config")
        .arg(&config)
        .arg("--profiles")
        .arg(&profiles)
        .arg("--out")
        .arg(dir.path().join("x"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3));
}

fn write_lines(path: &Path, lines: &[&str]) {
    std::fs::write(path, lines.join("\n")).unwrap();
}

#[test]
fn score_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let generated = dir.path().join("gen.txt");
    let gold = dir.path().join("gold.txt");
    write_lines(&generated, &["the cat sat", "markets rally"]);
    write_lines(&gold, &["the cat sat", "markets rally"]);
    let output = bin()
        .args(["score"])
        .arg("--generated")
        .arg(&generated)
        .arg("--gold")
        .arg(&gold)
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert_eq!(stdout, "1\n1\nmean: 1\n");
}

#[test]
fn score_partial_overlap_line() {
    let dir = tempfile::tempdir().unwrap();
    let generated = dir.path().join("gen.txt");
    let gold = dir.path().join("gold.txt");
    write_lines(&generated, &["the cat sat"]);
    write_lines(&gold, &["the cat ran"]);
    let output = bin()
        .args(["score"])
        .arg("--generated")
        .arg(&generated)
        .arg("--gold")
        .arg(&gold)
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    let first: f64 = stdout.lines().next().unwrap().parse().unwrap();
    assert!((first - 2.0 / 3.0).abs() < 1e-12);
}

#[test]
fn score_line_count_mismatch_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let generated = dir.path().join("gen.txt");
    let gold = dir.path().join("gold.txt");
    write_lines(&generated, &["a"]);
    write_lines(&gold, &["a", "extra line"]);
    let output = bin()
        .args(["score"])
        .arg("--generated")
        .arg(&generated)
        .arg("--gold")
        .arg(&gold)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}
