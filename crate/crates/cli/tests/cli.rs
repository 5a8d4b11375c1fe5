use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn hessflow(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hessflow"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("spawn hessflow")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn presets() -> Vec<String> {
    let o = Command::new(env!("CARGO_BIN_EXE_hessflow")).arg("preset").output().unwrap();
    assert_eq!(code(&o), 0);
    String::from_utf8(o.stdout).unwrap().lines().map(str::to_string).collect()
}

#[test]
fn every_preset_simulates_with_a_complete_record() {
    let dir = tempfile::tempdir().unwrap();
    let names = presets();
    assert_eq!(names.len(), 11);
    for name in &names {
        let out = dir.path().join(name);
        let o = hessflow(&["simulate", "--preset", name, "--set", "integrator.t_end=1"], &out);
        assert_eq!(code(&o), 0, "{name}: {}", stderr(&o));
        let csv = read(&out.join("trajectory.csv"));
        assert_eq!(csv.lines().count(), 1 + 101, "{name}");
        let rec: Value = serde_json::from_str(&read(&out.join("run.json"))).unwrap();
        assert_eq!(rec["command"], "simulate");
        assert_eq!(rec["config"]["scenario"]["system"], name.as_str());
        let outputs = rec["outputs"].as_array().unwrap();
        assert_eq!(outputs[0]["file"], "trajectory.csv");
        assert_eq!(outputs[0]["bytes"].as_u64().unwrap() as usize, csv.len());
        assert_eq!(outputs[0]["sha256"].as_str().unwrap().len(), 64);
    }
}

#[test]
fn classical_columns_and_zero_horizon() {
    let dir = tempfile::tempdir().unwrap();
    let o = hessflow(
        &["simulate", "--preset", "classical-ha", "--set", "integrator.t_end=0"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = read(&dir.path().join("trajectory.csv"));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,m1,m2,m3,g1,g2,g3,F1,F2,F3,F4");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("0.0,"));
    assert!(csv.ends_with("\r\n"));
}

#[test]
fn seeded_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["simulate", "--preset", "ndim-ha", "--set", "integrator.t_end=2"];
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(code(&hessflow(&args, &a)), 0);
    assert_eq!(code(&hessflow(&args, &b)), 0);
    assert_eq!(
        std::fs::read(a.join("trajectory.csv")).unwrap(),
        std::fs::read(b.join("trajectory.csv")).unwrap()
    );
    let c = dir.path().join("c");
    let mut reseeded = args.to_vec();
    reseeded.extend(["--set", "scenario.seed=2"]);
    assert_eq!(code(&hessflow(&reseeded, &c)), 0);
    assert_ne!(
        std::fs::read(a.join("trajectory.csv")).unwrap(),
        std::fs::read(c.join("trajectory.csv")).unwrap()
    );
}

#[test]
fn run_record_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let args = ["simulate", "--preset", "geodesic-b", "--set", "integrator.t_end=1"];
    assert_eq!(code(&hessflow(&args, &a)), 0);
    let rec = a.join("run.json");
    let b = dir.path().join("b");
    let o = hessflow(&["simulate", "--config", rec.to_str().unwrap()], &b);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(read(&a.join("trajectory.csv")), read(&b.join("trajectory.csv")));
}

#[test]
fn config_file_errors_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(
        &cfg,
        r#"{"scenario":{"name":"x","system":"pendulum","n":4},"integrator":{"method":"rk4","step":"fast","t_end":1}}"#,
    )
    .unwrap();
    let o = hessflow(&["simulate", "--config", cfg.to_str().unwrap()], &dir.path().join("o"));
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("integrator.step"), "{}", stderr(&o));

    let o = hessflow(&["simulate", "--preset", "hess4", "--set", "params.bogus=1"], &dir.path().join("o"));
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("params.bogus"), "{}", stderr(&o));

    let o = hessflow(&["check", "--preset", "hess4", "--suite", "bogus"], &dir.path().join("o"));
    assert_eq!(code(&o), 2);

    let o = hessflow(&["check", "--preset", "pendulum", "--suite", "lax"], &dir.path().join("o"));
    assert_eq!(code(&o), 2);

    let missing = dir.path().join("missing.json");
    let o = hessflow(&["simulate", "--config", missing.to_str().unwrap()], &dir.path().join("o"));
    assert_eq!(code(&o), 2);
}

#[test]
fn blow_up_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = hessflow(
        &["simulate", "--preset", "classical-ha", "--set", "integrator.step=5", "--set", "integrator.t_end=1000"],
        dir.path(),
    );
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn lax_suite_passes_on_the_classical_top() {
    let dir = tempfile::tempdir().unwrap();
    let o = hessflow(&["check", "--preset", "classical-ha", "--suite", "lax"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let report: Value = serde_json::from_str(&read(&dir.path().join("report.json"))).unwrap();
    assert_eq!(report["pass"], true);
    assert_eq!(report["suites"][0]["suite"], "lax");
    assert!(read(&dir.path().join("report.txt")).contains("== lax : PASS"));
}

#[test]
fn broken_condition_fails_invariance() {
    let dir = tempfile::tempdir().unwrap();
    let ok = hessflow(&["check", "--preset", "ndim-ha", "--suite", "invariance"], &dir.path().join("ok"));
    assert_eq!(code(&ok), 0);
    let bad = hessflow(
        &["check", "--preset", "ndim-ha", "--suite", "invariance", "--set", "params.epsilon=0.1"],
        &dir.path().join("bad"),
    );
    assert_eq!(code(&bad), 1);
    let report: Value = serde_json::from_str(&read(&dir.path().join("bad/report.json"))).unwrap();
    assert_eq!(report["pass"], false);
}

#[test]
fn measure_needs_vanishing_b() {
    let dir = tempfile::tempdir().unwrap();
    let zero = hessflow(
        &["check", "--preset", "hess4", "--suite", "measure", "--b1", "0", "--b2", "0"],
        &dir.path().join("zero"),
    );
    assert_eq!(code(&zero), 0, "{}", String::from_utf8_lossy(&zero.stdout));
    let nonzero = hessflow(&["check", "--preset", "hess4", "--suite", "measure", "--b1", "0.5"], &dir.path().join("nz"));
    assert_eq!(code(&nonzero), 1);
}

fn scan_rows(csv: &str) -> Vec<Vec<String>> {
    let mut rd = csv::Reader::from_reader(csv.as_bytes());
    rd.records().map(|r| r.unwrap().iter().map(str::to_string).collect()).collect()
}

#[test]
fn epsilon_scan_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let o = hessflow(
        &["scan", "--preset", "ndim-ha", "--param", "params.epsilon", "--values", "0,0.01,0.1", "--suite", "invariance"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = read(&dir.path().join("scan.csv"));
    assert_eq!(
        csv.lines().next().unwrap(),
        "params.epsilon,invariance:max |m_k|,pass,status,message"
    );
    let rows = scan_rows(&csv);
    let v: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(v[0] < 1e-8 && v[0] < v[1] && v[1] < v[2], "{v:?}");
    let pass: Vec<&str> = rows.iter().map(|r| r[2].as_str()).collect();
    assert_eq!(pass, ["true", "false", "false"]);
}

#[test]
fn b_scan_flips_the_measure_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let o = hessflow(
        &["scan", "--preset", "hess4", "--b2", "0", "--param", "params.b1", "--values", "0,0.5", "--suite", "measure"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = scan_rows(&read(&dir.path().join("scan.csv")));
    assert_eq!(rows[0][2], "true");
    assert_eq!(rows[1][2], "false");
}

#[test]
fn scan_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    let o = hessflow(
        &["scan", "--preset", "hess4", "--param", "params.b1", "--values", "", "--suite", "measure"],
        &dir.path().join("empty"),
    );
    assert_eq!(code(&o), 0);
    assert_eq!(read(&dir.path().join("empty/scan.csv")).lines().count(), 1);

    let o = hessflow(&["scan", "--preset", "hess4", "--param", "params.zz", "--values", "1"], &dir.path().join("x"));
    assert_eq!(code(&o), 2);

    let o = hessflow(
        &["scan", "--preset", "hess4", "--param", "integrator.step", "--values", "0.001,4", "--suite", "invariance"],
        &dir.path().join("blow"),
    );
    assert_eq!(code(&o), 0);
    let rows = scan_rows(&read(&dir.path().join("blow/scan.csv")));
    assert_eq!(rows[0][3], "ok");
    assert_eq!(rows[1][3], "blow-up");
}
