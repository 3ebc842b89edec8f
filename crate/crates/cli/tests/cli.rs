use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_qconcolic"));
    c.env_remove("QCONCOLIC_SOLVER_CMD").env_remove("QCONCOLIC_REPORT_DIR");
    c
}

fn program(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../programs").join(name)
}

fn have_z3() -> bool {
    Command::new("z3").arg("--version").output().is_ok_and(|o| o.status.success())
}

fn run(c: &mut Command) -> Output {
    c.output().expect("binary runs")
}

#[test]
fn missing_file_is_a_usage_error() {
    let out = run(bin().args(["test", "does-not-exist.qcp"]));
    assert_eq!(out.status.code(), Some(64));
    assert!(String::from_utf8_lossy(&out.stderr).contains("does-not-exist.qcp"));
}

#[test]
fn unknown_flags_are_rejected() {
    assert_eq!(run(bin().args(["test", "x.qcp", "--frobnicate"])).status.code(), Some(64));
    assert_eq!(run(bin().args(["bench", "--qubits", "9", "--scale", "S"])).status.code(), Some(64));
    assert_eq!(run(bin().args(["bench", "--qubits", "1", "--scale", "XL"])).status.code(), Some(64));
    assert_eq!(run(bin().arg("--help")).status.code(), Some(0));
}

#[test]
fn bench_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let gen = |name: &str| {
        let out = run(bin()
            .args(["bench", "--qubits", "1", "--scale", "S", "--count", "40", "--seed", "3", "--out"])
            .arg(dir.path().join(name)));
        assert_eq!(out.status.code(), Some(0));
    };
    gen("a");
    gen("b");
    let mut files: Vec<_> = std::fs::read_dir(dir.path().join("a")).unwrap().map(|e| e.unwrap().file_name()).collect();
    files.sort();
    assert_eq!(files.len(), 41);
    for f in files {
        let a = std::fs::read(dir.path().join("a").join(&f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(&f)).unwrap();
        assert_eq!(a, b, "{f:?}");
    }
}

#[test]
fn empty_suite_has_empty_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(bin().args(["bench", "--qubits", "2", "--scale", "M", "--count", "0", "--out"]).arg(dir.path()));
    assert_eq!(out.status.code(), Some(0));
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["programs"].as_array().unwrap().len(), 0);
}

#[test]
fn compare_with_zero_budget_and_unknown_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let suite = dir.path().join("s");
    run(bin().args(["bench", "--qubits", "1", "--scale", "S", "--count", "3", "--out"]).arg(&suite));
    let out = run(bin().args(["compare", "--baselines", "quantum-magic"]).arg(&suite));
    assert_eq!(out.status.code(), Some(64));

    let out = run(bin().args(["compare", "--no-concolic", "--budget", "0"]).arg(&suite));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let c: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(suite.join("comparison.json")).unwrap()).unwrap();
    let rows = c["programs"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for r in rows {
        for m in r["methods"].as_array().unwrap() {
            assert_eq!(m["coverage"].as_f64(), Some(0.0));
        }
    }
}

#[test]
fn show_smt_is_byte_identical() {
    let args =
        ["show-smt", program("teleport.qcp").to_str().unwrap(), "--flip", "1", "--mode", "per-op"].map(String::from);
    let a = run(bin().args(&args));
    let b = run(bin().args(&args));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.contains("; (1) variable declarations") && text.contains("(check-sat-using qfnra-nlsat)"));

    let out = run(bin().args(["show-smt", program("teleport.qcp").to_str().unwrap(), "--flip", "99"]));
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn test_teleport_reaches_full_coverage() {
    if !have_z3() {
        eprintln!("z3 not found; skipping");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let out = run(bin()
        .args([
            "test",
            program("teleport.qcp").to_str().unwrap(),
            "--max-iters",
            "20",
            "--repeats",
            "10",
            "--seed",
            "1",
        ])
        .env("QCONCOLIC_REPORT_DIR", dir.path()));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report = std::fs::read_dir(dir.path()).unwrap().next().unwrap().unwrap().path();
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["config"]["max_iters"], 20);
    assert_eq!(r["config"]["seed"], 1);
    assert_eq!(r["coverage"]["ratio"].as_f64(), Some(1.0));
}

#[test]
fn test_mi_bug_lists_unsat_branch() {
    if !have_z3() {
        eprintln!("z3 not found; skipping");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let out =
        run(bin().args(["test", program("mi_bug.qcp").to_str().unwrap(), "--report"]).arg(dir.path().join("r.json")));
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stdout).contains("unsat branch: site 1"));
}

#[test]
fn solver_failures_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(bin()
        .args(["test", program("teleport.qcp").to_str().unwrap(), "--solver-cmd", "false {file}", "--report-dir"])
        .arg(dir.path()));
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}
