use std::path::Path;
use std::process::Command;

fn kinlab(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_kinlab"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, json: &str) {
    std::fs::write(dir.join("ball.json"), json).unwrap();
}

#[test]
fn verify_writes_certificates() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), r#"{"output_dir": "out"}"#);
    let out = kinlab(
        dir.path(),
        &["verify", "--config", "ball.json", "--checks", "multiplier_decay,kernel_l1,caflisch", "--budget-scale", "0.01"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let certs = kinlab::suite::read_jsonl(&dir.path().join("out/certificates.jsonl")).unwrap();
    assert_eq!(certs.len(), 3);
    let csv = std::fs::read_to_string(dir.path().join("out/summary.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.starts_with("check,status,constant,violations,seed\n"));
}

#[test]
fn missing_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = kinlab(dir.path(), &["verify", "--config", "missing.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn malformed_or_invalid_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "{ not json");
    assert_eq!(kinlab(dir.path(), &["verify", "--config", "ball.json"]).status.code(), Some(2));
    write_config(dir.path(), r#"{"budgets": {"grid": 0}}"#);
    assert_eq!(kinlab(dir.path(), &["verify", "--config", "ball.json"]).status.code(), Some(2));
    write_config(dir.path(), "{}");
    assert_eq!(
        kinlab(dir.path(), &["verify", "--config", "ball.json", "--checks", "nope"]).status.code(),
        Some(2)
    );
}

#[test]
fn loose_root_tolerance_fails_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), r#"{"output_dir": "out", "tolerances": {"root": 1e-2}}"#);
    let out = kinlab(dir.path(), &["verify", "--config", "ball.json", "--checks", "proj_distance2", "--budget-scale", "0.1"]);
    assert_eq!(out.status.code(), Some(1));
    let certs = kinlab::suite::read_jsonl(&dir.path().join("out/certificates.jsonl")).unwrap();
    assert!(certs[0].violations > 0);
}

#[test]
fn sweep_rows_and_outputs_stay_in_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), r#"{"output_dir": "out"}"#);
    let out = kinlab(
        dir.path(),
        &["sweep", "--config", "ball.json", "--s", "0.3,0.5,0.7,0.9", "--terms", "g0", "--budget-scale", "0.02"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("term,s,value,stderr,samples,flagged"));
    assert_eq!(lines.count(), 4);

    let out = kinlab(dir.path(), &["report", "--config", "ball.json"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("out/sweep_g0.dat").exists());

    let mut top: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    top.sort();
    assert_eq!(top, ["ball.json", "out"]);
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), r#"{"output_dir": "out", "seed": 3}"#);
    let out = kinlab(dir.path(), &["verify", "--config", "ball.json", "--checks", "multiplier_decay", "--seed", "11"]);
    assert_eq!(out.status.code(), Some(0));
    let certs = kinlab::suite::read_jsonl(&dir.path().join("out/certificates.jsonl")).unwrap();
    assert_eq!(certs[0].seed, 11);
}
