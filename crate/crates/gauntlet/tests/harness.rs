use std::fs;
use std::process::Command;

use gauntlet::report::{rows_to_csv, REPORT_FILE, ROWS_FILE};
use gauntlet::{find_preset, list_presets, run_experiment, verify_report, write_report, ExperimentConfig, HarnessError};

fn small(name: &str, trials: usize) -> ExperimentConfig {
    let mut c = find_preset(name).unwrap();
    c.trials = trials;
    c
}

#[test]
fn zero_trials_is_a_config_error() {
    let c = small("xor1", 0);
    assert!(matches!(run_experiment(&c), Err(HarnessError::Config(_))));
    let json = c.to_json();
    assert!(matches!(ExperimentConfig::from_json(&json), Err(HarnessError::Config(_))));
}

#[test]
fn unknown_ids_are_config_errors() {
    let mut c = small("xor1", 1);
    c.mechanism = "quantum_median".into();
    assert!(matches!(c.validate(), Err(HarnessError::Config(_))));
    let mut c = small("xor1", 1);
    c.attacker = Some("kmeans".into());
    assert!(matches!(c.validate(), Err(HarnessError::Config(_))));
}

#[test]
fn bq_omega1_reconstructs_exactly() {
    let (report, rows) = run_experiment(&find_preset("bq-omega1").unwrap()).unwrap();
    assert_eq!(rows.len(), 20);
    assert_eq!(report.aggregates.success_rate, 1.0);
    assert!(rows.iter().all(|r| r.metric == 0.0 && r.deletions_used == 3 * 4 * 15));
}

#[test]
fn median_footnote_rows_are_unsafe_and_exact() {
    let (_, rows) = run_experiment(&small("median-footnote", 10)).unwrap();
    assert!(rows.iter().all(|r| r.success && r.metric == 0.0 && r.verdict == "UNSAFE"));
}

#[test]
fn rows_use_seed_plus_trial_index() {
    let mut c = small("sum-differencing", 5);
    c.seed = u64::MAX - 1;
    let (_, rows) = run_experiment(&c).unwrap();
    let seeds: Vec<u64> = rows.iter().map(|r| r.seed).collect();
    assert_eq!(seeds, vec![u64::MAX - 1, u64::MAX, 0, 1, 2]);
    assert!(rows.iter().enumerate().all(|(i, r)| r.trial == i));
}

#[test]
fn reruns_give_identical_csv_bytes() {
    for p in list_presets() {
        let c = ExperimentConfig { trials: p.trials.min(20), ..p };
        let (_, a) = run_experiment(&c).unwrap();
        let (_, b) = run_experiment(&c).unwrap();
        assert_eq!(rows_to_csv(&a).unwrap(), rows_to_csv(&b).unwrap(), "{}", c.experiment);
    }
}

#[test]
fn fresh_report_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let c = small("countmod-quadratic", 3);
    let (report, rows) = run_experiment(&c).unwrap();
    write_report(dir.path(), &report, &rows).unwrap();
    let back = verify_report(dir.path()).unwrap();
    assert_eq!(back.aggregates, report.aggregates);
}

#[test]
fn edited_cell_is_tampered() {
    let dir = tempfile::tempdir().unwrap();
    let (report, rows) = run_experiment(&small("xor2", 4)).unwrap();
    write_report(dir.path(), &report, &rows).unwrap();
    let path = dir.path().join(ROWS_FILE);
    let text = fs::read_to_string(&path).unwrap();
    let edited = text.replacen(",true,", ",false,", 1);
    assert_ne!(text, edited);
    fs::write(&path, edited).unwrap();
    assert!(matches!(verify_report(dir.path()), Err(HarnessError::Tampered(_))));
}

#[test]
fn consistent_forgery_fails_replay() {
    let dir = tempfile::tempdir().unwrap();
    let (mut report, mut rows) = run_experiment(&small("xor1", 3)).unwrap();
    rows[0].metric += 1.0;
    report.aggregates = gauntlet::Aggregates::from_rows(&rows);
    report.rows_sha256 = {
        use sha2::{Digest, Sha256};
        hex::encode(Sha256::digest(rows_to_csv(&rows).unwrap()))
    };
    write_report(dir.path(), &report, &rows).unwrap();
    assert!(matches!(verify_report(dir.path()), Err(HarnessError::Tampered(_))));
}

#[test]
fn missing_json_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let (report, rows) = run_experiment(&small("xor1", 2)).unwrap();
    write_report(dir.path(), &report, &rows).unwrap();
    fs::remove_file(dir.path().join(REPORT_FILE)).unwrap();
    assert!(matches!(verify_report(dir.path()), Err(HarnessError::Io { .. })));
}

#[test]
fn cli_run_list_verify() {
    let bin = env!("CARGO_BIN_EXE_gauntlet");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let list = Command::new(bin).arg("list").output().unwrap();
    assert!(list.status.success());
    assert!(String::from_utf8_lossy(&list.stdout).contains("kmeans-mixture"));

    let run = Command::new(bin)
        .args(["run", "xor1", "--trials", "5", "--seed", "9", "--out"])
        .arg(&out)
        .env("GAUNTLET_THREADS", "2")
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out.join(REPORT_FILE)).unwrap()).unwrap();
    assert_eq!(report["config"]["seed"], 9);
    assert_eq!(report["aggregates"]["trials"], 5);

    let config = dir.path().join("c.json");
    let mut c = find_preset("xor1").unwrap();
    c.trials = 5;
    c.seed = 9;
    c.output = Some(dir.path().join("from-file"));
    fs::write(&config, c.to_json()).unwrap();
    let run = Command::new(bin).arg("run").arg(&config).env("GAUNTLET_THREADS", "1").output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(fs::read(out.join(ROWS_FILE)).unwrap(), fs::read(dir.path().join("from-file").join(ROWS_FILE)).unwrap());

    let ok = Command::new(bin).arg("verify").arg(&out).output().unwrap();
    assert!(ok.status.success());
    let bad = Command::new(bin).args(["run", "no-such-preset"]).output().unwrap();
    assert!(!bad.status.success());
    let bad = Command::new(bin).args(["run", "xor1", "--trials", "1"]).env("GAUNTLET_THREADS", "0").output().unwrap();
    assert!(!bad.status.success());
}
