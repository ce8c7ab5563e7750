use std::io::Write;
use std::process::Command;

fn selpat() -> Command {
    Command::new(env!("CARGO_BIN_EXE_selpat"))
}

fn toy_file() -> tempfile::NamedTempFile {
    let mut f = tempfile::Builder::new().suffix(".txt").tempfile().unwrap();
    f.write_all(b"-1.5\t0\n1.8\t1\n").unwrap();
    f
}

#[test]
fn toy_subcommand_prints_both_p_values() {
    let out = selpat().arg("toy").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("naive p-value:     0.0359"));
    assert!(text.contains("selective p-value: 0.0719"));
    assert!(text.contains("[0, inf]"));
}

#[test]
fn mine_emits_json() {
    let f = toy_file();
    let out = selpat()
        .args(["mine", "--mode", "positive", "--k", "1", "--r", "2", "--no-center"])
        .arg(f.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["patterns"][0]["pattern"], serde_json::json!([1]));
    assert_eq!(v["patterns"][0]["score"], 1.8);
    assert_eq!(v["stats"]["visited"], 3);
}

#[test]
fn infer_writes_json_and_csv() {
    let f = toy_file();
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("out.csv");
    let out = selpat()
        .args(["infer", "--mode", "positive", "--k", "1", "--r", "2", "--no-center", "--csv"])
        .arg(&csv_path)
        .arg(f.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rec = &v["records"][0];
    assert!((rec["selective_p"].as_f64().unwrap() - 0.0719).abs() < 1e-3);
    assert!((rec["naive_p"].as_f64().unwrap() - 0.0359).abs() < 1e-3);
    assert_eq!(rec["positive"], false);
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("pattern,score,selective_p,naive_p,adjusted_p,decision")
    );
    assert!(lines.next().unwrap().ends_with(",negative"));
}

#[test]
fn infer_naive_baseline_flags_toy_as_positive() {
    let f = toy_file();
    let out = selpat()
        .args(["infer", "--mode", "positive", "--k", "1", "--r", "2", "--no-center"])
        .args(["--baseline", "naive"])
        .arg(f.path())
        .output()
        .unwrap();
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["records"][0]["positive"], true);
}

#[test]
fn bad_input_fails_with_line_number() {
    let mut f = tempfile::Builder::new().suffix(".txt").tempfile().unwrap();
    f.write_all(b"1.0\t0\n2.0\t1 1\n").unwrap();
    let out = selpat().args(["mine"]).arg(f.path()).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn experiment_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("summary.json");
    let out = selpat()
        .args(["experiment", "fpr", "--n", "30", "--d", "8", "--r", "2", "--k", "2", "--trials", "5", "--json"])
        .arg(&json)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 4);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(v[0]["methods"].as_array().unwrap().len(), 3);
}
