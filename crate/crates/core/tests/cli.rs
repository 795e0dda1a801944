//! End-to-end checks of the `bbrates` binary: exit codes, output files,
//! and run-to-run determinism.

use std::path::Path;
use std::process::{Command, Output};

fn bbrates(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bbrates"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) {
    std::fs::write(dir.join("config.json"), text).unwrap();
}

const TWO_SPIN: &str = r#"{
    "units": {"system": "dimensionless"},
    "hamiltonian": {"n": 2, "terms": ["0.5 Z1", "0.5 Z2", "0.1 X1 X2"]},
    "geometry": {"lattice": {"n": 2, "spacing": 0.5}},
    "coupling": {"mu": 1.0, "temperature": 1.0}
}"#;

#[test]
fn missing_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = bbrates(dir.path(), &["rates"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn malformed_hamiltonian_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("h.txt"), "0.5 Z1\nnot-a-number X2\n").unwrap();
    write_config(
        dir.path(),
        r#"{
            "units": {"system": "dimensionless"},
            "hamiltonian": {"n": 2, "file": "h.txt"},
            "geometry": {"lattice": {"n": 2, "spacing": 1.0}},
            "coupling": {"mu": 1.0, "temperature": 1.0}
        }"#,
    );
    let out = bbrates(dir.path(), &["rates"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 2"), "stderr: {stderr}");
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    write_config(
        dir.path(),
        &TWO_SPIN.replace("\"coupling\"", "\"typo_block\": {}, \"coupling\""),
    );
    let out = bbrates(dir.path(), &["rates"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn rates_writes_expected_files() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), TWO_SPIN);
    let out = bbrates(dir.path(), &["rates", "--out", "results"]);
    assert_eq!(out.status.code(), Some(0), "{:?}", out);
    for f in [
        "spectrum.csv",
        "rates_stimulated.csv",
        "rates_spontaneous.csv",
        "summary.json",
    ] {
        assert!(dir.path().join("results").join(f).is_file(), "missing {f}");
    }
    let spectrum = std::fs::read_to_string(dir.path().join("results/spectrum.csv")).unwrap();
    assert!(spectrum.starts_with("m,energy,manifold\n"));
    assert_eq!(spectrum.lines().count(), 5);
    let rates = std::fs::read_to_string(dir.path().join("results/rates_stimulated.csv")).unwrap();
    assert!(rates.starts_with("n,m,e_n,e_m,omega_nm,rate,kernel_provenance\n"));
}

#[test]
fn rates_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), TWO_SPIN);
    assert_eq!(
        bbrates(dir.path(), &["rates", "--out", "a"]).status.code(),
        Some(0)
    );
    assert_eq!(
        bbrates(dir.path(), &["rates", "--out", "b"]).status.code(),
        Some(0)
    );
    for f in [
        "spectrum.csv",
        "rates_stimulated.csv",
        "rates_spontaneous.csv",
        "summary.json",
    ] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs between runs");
    }
}

#[test]
fn evolve_oversized_dt_exits_3_with_suggestion() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), TWO_SPIN);
    let out = bbrates(dir.path(), &["evolve", "--t-final", "10", "--dt", "1e9"]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("use dt <="), "stderr: {stderr}");
}

#[test]
fn evolve_bad_initial_state_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), TWO_SPIN);
    let out = bbrates(
        dir.path(),
        &[
            "evolve",
            "--p0",
            "0.5,0.5",
            "--t-final",
            "1",
            "--dt",
            "0.001",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn evolve_writes_trajectory_and_convergence() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), TWO_SPIN);
    let out = bbrates(
        dir.path(),
        &["evolve", "--t-final", "200", "--dt", "0.002", "--out", "ev"],
    );
    assert_eq!(out.status.code(), Some(0), "{:?}", out);
    let traj = std::fs::read_to_string(dir.path().join("ev/trajectory.csv")).unwrap();
    assert!(traj.starts_with("t,p_1,p_2,p_3,p_4\n"));
    let convergence: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("ev/convergence.json")).unwrap(),
    )
    .unwrap();
    assert!(convergence["final_distance_to_gibbs"].as_f64().unwrap() < 1e-3);
    assert!(
        convergence["detailed_balance_worst_error"]
            .as_f64()
            .unwrap()
            < 1e-10
    );
    assert!(convergence["warning"].is_null());
}

#[test]
fn regime_scan_covers_both_limits() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), TWO_SPIN);
    let out = bbrates(
        dir.path(),
        &[
            "regime-scan",
            "--scan",
            "spacing",
            "--from",
            "1e-3",
            "--to",
            "1e4",
            "--points",
            "15",
            "--out",
            "scan",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{:?}", out);
    let csv = std::fs::read_to_string(dir.path().join("scan/scan.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "parameter,rate_general,rate_coherent_limit,rate_incoherent_limit,verdict"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 15);
    assert!(rows.first().unwrap().ends_with("coherent"));
    assert!(rows.last().unwrap().ends_with("incoherent"));
}

#[test]
fn regime_scan_bad_pair_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), TWO_SPIN);
    let out = bbrates(
        dir.path(),
        &[
            "regime-scan",
            "--scan",
            "omega",
            "--from",
            "0.1",
            "--to",
            "10",
            "--points",
            "5",
            "--upper",
            "99",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn kernel_dump_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), TWO_SPIN);
    let out = bbrates(dir.path(), &["kernel-dump", "--omega", "2.0", "--out", "k"]);
    assert_eq!(out.status.code(), Some(0), "{:?}", out);
    let csv = std::fs::read_to_string(dir.path().join("k/kernel.csv")).unwrap();
    assert!(csv.starts_with("i,h,j,l,re_q,im_q,provenance,achieved_error\n"));
    // 2 dipoles, 3 axes each: 36 entries plus the header
    assert_eq!(csv.lines().count(), 37);
}
