use std::fs;
use std::process::Command;

use poreflow::{run_scenario, ExperimentConfig, Scenario};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_poreflow"))
}

#[test]
fn dry_run_applies_overrides() {
    let out = bin().args(["transport", "--dry-run", "--seed", "3", "--set", "numerics.span=4"]).output().unwrap();
    assert!(out.status.success());
    let cfg = ExperimentConfig::from_toml(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(cfg.scenario, Scenario::HyperbolicStability);
    assert_eq!(cfg.seed, 3);
    assert_eq!(cfg.numerics.span, 4.0);
}

#[test]
fn hypothesis_violation_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["parabolic", "--set", "perturbation.epsilon=3", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    let text = String::from_utf8(out.stderr).unwrap();
    assert!(text.contains("1/(2 gamma)"), "{text}");
}

#[test]
fn xy_writes_report_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().arg("xy").arg("--out").arg(dir.path()).output().unwrap();
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["scenario"], "xy-lemma");
    assert_eq!(report["pass"], true);
    let table = fs::read_to_string(dir.path().join("xy.csv")).unwrap();
    assert!(table.starts_with('#'));
    assert!(table.lines().nth(1).unwrap().contains(','));
}

#[test]
fn shipped_configs_match_defaults() {
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs");
    for s in Scenario::ALL {
        let text = fs::read_to_string(format!("{root}/{s}.toml")).unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), ExperimentConfig::new(s), "{s}");
    }
}

#[test]
fn failed_run_is_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(Scenario::SelfsimilarAudit);
    cfg.model.gamma = 0.7;
    assert!(run_scenario(&cfg, dir.path()).is_err());
}
