use std::fs;
use std::path::Path;
use std::process::Command;

use cuspflow_cli::config::ExperimentConfig;
use cuspflow_cli::replay::replay_verify;
use cuspflow_cli::run::{run, RunOutcome, StatsFile};
use cuspflow::VerificationReport;

fn run_in(dir: &Path, body: &str) -> RunOutcome {
    let text = format!("[sweep]\noutput_dir = {:?}\n{body}", dir.join("out").display().to_string());
    let cfg = ExperimentConfig::parse(&text, "test.toml").unwrap();
    run(&cfg, &text).unwrap()
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cuspflow"))
}

#[test]
fn minimal_run_writes_initial_snapshot() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), "k_list = [10]\nt_end = 0.0\n");
    let root = tmp.path().join("out");
    for f in ["config.toml", "summary.txt", "lengths.csv", "convergence.csv", "curvature_sups.csv"] {
        assert!(root.join(f).is_file(), "{f}");
    }
    let stats: StatsFile = serde_json::from_slice(&fs::read(root.join("k10/stats.json")).unwrap()).unwrap();
    assert_eq!(stats.schema_version, 1);
    assert_eq!(stats.snapshots.len(), 1);
    assert!(root.join("k10/snapshots/snap_000_polar.csv").is_file());
    assert!(root.join("k10/snapshots/snap_000_cap.csv").is_file());
    let report = &out.members[0].report;
    for name in ["initial equals -ln s", "initial below upper cigar", "initial above lower cigar", "initial equals lower cigar"] {
        assert_eq!(report.get(name).unwrap().max_violation, Some(0.0), "{name}");
    }
    // every t = 0 check passes except the curvature floor, which the glued data breaks
    let failing: Vec<&str> = report.failures().map(|e| e.name.as_str()).collect();
    assert_eq!(failing, vec![cuspflow::verify::names::CHEN]);
}

#[test]
fn small_k_is_rejected_by_the_binary() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.toml");
    fs::write(&path, "[sweep]\nk_list = [5]\nt_end = 1.0\noutput_dir = \"x\"\n").unwrap();
    let o = bin().arg("run").arg(&path).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.toml:2:") && err.contains("k >= 10"), "{err}");
}

#[test]
fn exit_code_follows_verification() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    fs::write(&cfg, "[sweep]\nk_list = [10]\nt_end = 0.0\noutput_dir = \"unused\"\n").unwrap();
    let out = tmp.path().join("run");
    let o = bin().args(["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--threads", "1"]).output().unwrap();
    let report: VerificationReport =
        serde_json::from_slice(&fs::read(out.join("k10/verification.json")).unwrap()).unwrap();
    assert_eq!(o.status.code(), Some(if report.all_pass() { 0 } else { 1 }));
}

#[test]
fn replay_reproduces_reports_and_detects_tampering() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), "k_list = [10, 12]\nt_end = 0.5\n");
    let root = tmp.path().join("out");
    let replayed = replay_verify(&root).unwrap();
    assert_eq!(replayed.len(), 2);
    for (m, r) in out.members.iter().zip(&replayed) {
        assert!(r.matches(), "k = {}", r.k);
        assert_eq!(m.report, r.replayed);
    }

    let victim = root.join("k12/snapshots/snap_002_polar.csv");
    let text = fs::read_to_string(&victim).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let row: Vec<&str> = lines[10].split(',').collect();
    let bumped = row[1].parse::<f64>().unwrap() + 0.5;
    lines[10] = format!("{},{bumped:.16e}", row[0]);
    fs::write(&victim, lines.join("\n") + "\n").unwrap();
    let err = replay_verify(&root).unwrap_err().to_string();
    assert!(err.contains("snap_002_polar.csv") && err.contains("sha256"), "{err}");

    fs::remove_file(&victim).unwrap();
    let err = replay_verify(&root).unwrap_err().to_string();
    assert!(err.contains("snap_002_polar.csv"), "{err}");
}

#[test]
fn replay_of_empty_directory_is_an_integrity_error() {
    let tmp = tempfile::tempdir().unwrap();
    let err = replay_verify(tmp.path()).unwrap_err().to_string();
    assert!(err.contains("integrity") && err.contains("config.toml"), "{err}");
}

#[test]
fn runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_in(a.path(), "k_list = [10, 11]\nt_end = 0.1\nthreads = 2\n");
    run_in(b.path(), "k_list = [10, 11]\nt_end = 0.1\nthreads = 1\n");
    for f in ["lengths.csv", "convergence.csv", "curvature_sups.csv", "k11/snapshots/snap_003_polar.csv", "k11/snapshots/snap_003_cap.csv"] {
        assert_eq!(fs::read(a.path().join("out").join(f)).unwrap(), fs::read(b.path().join("out").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn schema_is_printed() {
    let o = bin().arg("print-schema").output().unwrap();
    assert!(o.status.success());
    let s = String::from_utf8_lossy(&o.stdout);
    assert!(s.contains("schema_version") && s.contains("snap_NNN_polar.csv"));
}
