use std::path::Path;
use std::process::Command;

use flatpencil::catalog::{entries, lookup, Expect};
use flatpencil::output::to_json;
use flatpencil::runner::{run, Overrides};
use flatpencil::scenario::Scenario;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_flatpencil"))
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn every_catalog_entry_meets_its_expectation() {
    for e in entries() {
        let scenario = lookup(e.name).unwrap();
        let report = run(&scenario, Overrides::default()).unwrap();
        let failing: Vec<_> = report.checks.iter().filter(|c| !c.passed).collect();
        assert_eq!(
            report.passed(),
            e.expect == Expect::Pass,
            "{}: failing checks {failing:?}",
            e.name
        );
    }
}

#[test]
fn catalog_listing_is_stable() {
    let a = bin().arg("catalog").output().unwrap();
    let b = bin().arg("catalog").output().unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.contains("s4-log-pencil"));
    assert!(text.lines().count() >= 9);
    for name in [
        "euclidean",
        "polar",
        "sphere",
        "diag-u",
        "s4-log-pencil",
        "s4-constant-curvature",
        "dressing-gaussian",
        "dressing-separable",
        "dressing-reduced",
    ] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name}");
    }
}

#[test]
fn exit_codes_follow_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let pass = write(dir.path(), "pass.json", r#"{"kind": "catalog", "entry": "euclidean"}"#);
    let fail = write(
        dir.path(),
        "fail.json",
        r#"{"kind": "catalog", "entry": "lame-sphere"}"#,
    );
    let unknown = write(
        dir.path(),
        "unknown.json",
        r#"{"kind": "catalog", "entry": "no-such-entry"}"#,
    );
    let broken = write(dir.path(), "broken.json", r#"{"kind": "check-flat", "chart": 3}"#);
    let bad_expr = write(
        dir.path(),
        "expr.json",
        r#"{"kind": "check-flat", "chart": {"lower": [0, 0], "upper": [1, 1], "points": 9},
            "metric": {"diagonal": ["1 +", "1"]}}"#,
    );
    let code = |p: &Path| bin().arg("run").arg(p).output().unwrap().status.code();
    assert_eq!(code(&pass), Some(0));
    assert_eq!(code(&fail), Some(2));
    assert_eq!(code(&unknown), Some(1));
    assert_eq!(code(&broken), Some(1));
    assert_eq!(code(&bad_expr), Some(1));
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(
        dir.path(),
        "s.json",
        r#"{"kind": "catalog", "entry": "reduce-log", "seed": 7}"#,
    );
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("r{k}.json"));
        let status = bin().arg("run").arg(&scenario).arg("--out").arg(&out).status().unwrap();
        assert!(status.success());
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn seed_changes_random_probes() {
    let a = run(
        &lookup("reduce-log").unwrap(),
        Overrides {
            seed: Some(1),
            ..Default::default()
        },
    )
    .unwrap();
    let b = run(
        &lookup("reduce-log").unwrap(),
        Overrides {
            seed: Some(2),
            ..Default::default()
        },
    )
    .unwrap();
    assert_ne!(a.details["probes"], b.details["probes"]);
    assert_eq!(a.settings.seed, 1);
}

#[test]
fn flags_and_environment_override_settings() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(dir.path(), "s.json", r#"{"kind": "catalog", "entry": "euclidean"}"#);
    let out = dir.path().join("r.json");
    let status = bin()
        .args(["run"])
        .arg(&scenario)
        .args(["--tol", "0.5", "--order", "2", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(report["settings"]["order"], 2);
    assert_eq!(report["settings"]["tolerance"].as_f64(), Some(0.5));

    let status = bin()
        .arg("run")
        .arg(&scenario)
        .env("FLATPENCIL_OUT", &out)
        .env("FLATPENCIL_SEED", "11")
        .status()
        .unwrap();
    assert!(status.success());
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(report["settings"]["seed"], 11);

    let bad = bin().arg("run").arg(&scenario).args(["--order", "3"]).output().unwrap();
    assert!(!bad.status.success());
}

#[test]
fn csv_tables_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(dir.path(), "s.json", r#"{"kind": "catalog", "entry": "sphere"}"#);
    let csv_dir = dir.path().join("csv");
    let status = bin()
        .arg("run")
        .arg(&scenario)
        .arg("--dump-csv")
        .arg(&csv_dir)
        .stdout(std::process::Stdio::null())
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(csv_dir.join("check_flat_curvature_defect.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("u1,u2,defect"));
    assert_eq!(lines.count(), 41 * 41);
}

#[test]
fn floats_carry_seventeen_significant_digits() {
    let report = run(&lookup("polar").unwrap(), Overrides::default()).unwrap();
    let json = to_json(&report).unwrap();
    assert!(json.contains("\"tolerance\": 9.9999999999999995e-7"), "{json}");
}

#[test]
fn scenario_round_trips_through_its_echo() {
    for e in entries() {
        let s = lookup(e.name).unwrap();
        let again = Scenario::from_value(s.to_value()).unwrap();
        assert_eq!(s, again, "{}", e.name);
    }
}

#[test]
fn unknown_fields_are_rejected() {
    let err = Scenario::from_str(
        r#"{"kind": "check-flat", "chart": {"lower": [0], "upper": [1], "points": 9},
            "metric": {"diagonal": ["1"]}, "metrik": 1}"#,
    );
    assert!(err.is_err());
}
