//! End-to-end checks of the installed binary: flag handling, exit codes,
//! and the report files a run leaves behind.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sidonlab"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sidonlab-cli-io-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

const MINIMAL: &str = r#"{
  "params": {"rule": {"sidon": {"d": "11"}}},
  "sets": {"X1": {"tower": 1}},
  "stages": {"max_stage": 3},
  "mixing": {"a": "X1", "b": "X1", "ns": ["0", "12"]}
}"#;

#[test]
fn stages_writes_csv_and_json() {
    let dir = temp_dir("stages");
    let config = dir.join("config.json");
    std::fs::write(&config, MINIMAL).unwrap();
    let out = dir.join("out");
    let status = bin()
        .args([
            "stages",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--quiet",
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(out.join("stages.csv")).unwrap();
    assert!(csv.starts_with("j,r,h,w,w_dec,mu_X,mu_X_dec,sum_inv_r,sum_inv_r_dec\n"));
    assert!(csv.contains("2,4,134,1/2,0.500000000000,67,67.0000000000,3/4,0.750000000000"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("stages.json")).unwrap()).unwrap();
    assert_eq!(json["command"], "stages");
    assert_eq!(json["rows"][1]["h"], "134");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn theorem3_reports_carry_the_exact_witness_values() {
    let dir = temp_dir("theorem3");
    let config = dir.join("config.json");
    std::fs::write(
        &config,
        r#"{
          "params": {"rule": {"sidon": {"d": "11"}}},
          "sets": {"X2": {"tower": 2}},
          "theorem3": {"set": "X2", "stages": [2, 3], "direction": "forward"}
        }"#,
    )
    .unwrap();
    let out = dir.join("out");
    let status = bin()
        .args([
            "theorem3",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--quiet",
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(out.join("theorem3.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("2,forward,4,67,"));
    assert!(lines[1].contains(",0,"), "expr0 must be 0: {}", lines[1]);
    assert!(
        lines[1].contains("67/2"),
        "expr1 must be 67/2: {}",
        lines[1]
    );
    assert!(lines[2].starts_with("3,forward,8,67,"));
    assert!(
        lines[2].contains("201/4"),
        "expr1 must be 201/4: {}",
        lines[2]
    );
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn malformed_config_exits_two_without_output() {
    let dir = temp_dir("bad");
    let config = dir.join("config.json");
    std::fs::write(&config, r#"{"params": {"rule": {"sidon": {"d": "1"}}}}"#).unwrap();
    let out = dir.join("out");
    let status = bin()
        .args([
            "stages",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    assert!(!out.exists(), "no output directory on config error");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn unknown_subcommand_and_missing_flags_exit_two() {
    let status = bin().args(["definitely-not-a-command"]).status().unwrap();
    assert_eq!(status.code(), Some(2));
    let status = bin().args(["stages"]).status().unwrap();
    assert_eq!(status.code(), Some(2));
    let status = bin().status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn stage_cap_violation_exits_three() {
    let dir = temp_dir("cap");
    let config = dir.join("config.json");
    // the stage-6 table is fine by default, but a low cap forbids it
    std::fs::write(
        &config,
        r#"{
          "params": {"rule": {"sidon": {"d": "11"}}},
          "stages": {"max_stage": 6}
        }"#,
    )
    .unwrap();
    let out = dir.join("out");
    let status = bin()
        .args([
            "stages",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--stage-cap",
            "3",
            "--quiet",
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn missing_block_exits_two() {
    let dir = temp_dir("block");
    let config = dir.join("config.json");
    std::fs::write(&config, r#"{"params": {"rule": {"sidon": {"d": "11"}}}}"#).unwrap();
    let status = bin()
        .args(["theorem3", "--config", config.to_str().unwrap(), "--quiet"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    std::fs::remove_dir_all(&dir).ok();
}
