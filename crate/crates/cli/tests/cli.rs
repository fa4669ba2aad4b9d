use std::path::Path;
use std::process::{Command, Output};

fn sdof(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sdof")).args(args).arg("--out").arg(out).output().unwrap()
}

#[test]
fn gaussian_pass_exits_zero_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = sdof(&["gaussian", "--M", "4", "--J1", "2", "--J2", "2", "--r1", "1", "--r2", "1"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("rates.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("snr_db,R0,R1,R2,leakage_max"));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["verdict"], "pass");
    assert_eq!(summary["target"], serde_json::json!(["0", "1", "1"]));
}

#[test]
fn infeasible_request_exits_one_with_bound() {
    let dir = tempfile::tempdir().unwrap();
    let out = sdof(&["gaussian", "--M", "3", "--J1", "1", "--J2", "3", "--r1", "1"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("min(1, 3 - 3*1) = 0"));
}

#[test]
fn rank_deficient_channel_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let channel = dir.path().join("bad.json");
    // Two identical rows in C^2.
    std::fs::write(
        &channel,
        r#"{"M": 2, "N1": 1, "N2": 1, "J1": 1, "J2": 1, "matrices": {
            "H_1_1": [[1, 0], [0, 1]], "H_2_1": [[1, 0], [0, 1]]}}"#,
    )
    .unwrap();
    let out = sdof(&["verify-channel", "--channel", channel.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = std::fs::read_to_string(dir.path().join("summary.json")).unwrap();
    assert!(summary.contains("H_1_1[1]") && summary.contains("H_2_1[1]"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"model": "ergodic", "M": 3, "J1": 2, "J2": 2, "blocks": 500}"#).unwrap();
    let out = sdof(&["region", "--config", cfg.to_str().unwrap(), "--J2", "4"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["J2"], 4);
    assert_eq!(summary["vertices"].as_array().unwrap().len(), 3);
}

#[test]
fn compare_rejects_multi_antenna_users() {
    let dir = tempfile::tempdir().unwrap();
    let out = sdof(&["compare", "--M", "4", "--N1", "2", "--J1", "1", "--J2", "1"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_flag_values_are_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = sdof(&["ergodic", "--M", "3", "--J1", "2", "--J2", "2", "--power_policy", "half"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = sdof(&["ergodic", "--M", "3", "--J1", "2", "--J2", "2", "--snr_db_grid", "80,60,100"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = sdof(&["ergodic", "--bogus", "1"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}
