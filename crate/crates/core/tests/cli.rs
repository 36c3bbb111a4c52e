use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_beable-sim"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn overlap_prints_one_at_zero() {
    let o = run(&["overlap", "--d-over-lambda", "0"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split('\t').collect();
    assert_eq!(row[1], "1");
    let numeric: f64 = row[2].parse().unwrap();
    assert!((numeric - 1.0).abs() < 1e-6);
}

#[test]
fn simulate_is_reproducible() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let o = run(&[
            "simulate",
            "--scenario",
            config("ex1.toml").to_str().unwrap(),
            "--trials",
            "10",
            "--seed",
            "7",
            "--out",
            d.path().to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["detections.csv", "beables.csv", "summary.json", "histogram.csv"] {
        let a = std::fs::read(dirs[0].path().join(f)).unwrap();
        let b = std::fs::read(dirs[1].path().join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn grid_detector_writes_cells() {
    let d = tempfile::tempdir().unwrap();
    let o = run(&[
        "simulate",
        "--scenario",
        config("ex1.toml").to_str().unwrap(),
        "--trials",
        "20",
        "--detector",
        "grid",
        "--cell",
        "0.5",
        "--grid",
        "0:5:11",
        "--out",
        d.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut r = csv::Reader::from_path(d.path().join("detections.csv")).unwrap();
    assert_eq!(r.headers().unwrap().len(), 10);
    for row in r.records() {
        let row = row.unwrap();
        let i: i64 = row[7].parse().unwrap();
        let x: f64 = row[3].parse().unwrap();
        assert_eq!(((i as f64) + 0.5) * 0.5, x);
    }
}

#[test]
fn abl_frequencies_follow_amplitudes() {
    let o = run(&["abl", "--scenario", config("ex5.toml").to_str().unwrap(), "--trials", "1000", "--grid", "0:4:5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("object origin frequency"));
    assert!(!text.contains(" off"), "{text}");
    assert!(text.contains("max drift 0"));
}

#[test]
fn beables_prints_a_trajectory() {
    let o = run(&["beables", "--scenario", config("ex1.toml").to_str().unwrap(), "--trial", "3", "--grid", "0:6:13"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let values: Vec<(f64, f64)> = r.records().map(|x| x.unwrap()).map(|x| (x[3].parse().unwrap(), x[4].parse().unwrap())).collect();
    assert_eq!(values.len(), 13);
    // a pinned step: excited then ground, trace distance complementary
    assert_eq!(values[0], (1.0, 0.0));
    assert!(values.iter().all(|&(v, d)| (v + d - 1.0).abs() < 1e-12));
}

#[test]
fn stats_prints_json() {
    let o = run(&["stats", "--scenario", config("ex3.toml").to_str().unwrap(), "--trials", "200"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["trials"], 200);
    assert!(v["correlation"].as_f64().unwrap().abs() < 0.3);
}

#[test]
fn convergence_writes_table() {
    let d = tempfile::tempdir().unwrap();
    let o = run(&[
        "convergence",
        "--scenario",
        config("ex2.toml").to_str().unwrap(),
        "--trials",
        "500",
        "--t-values",
        "10,20",
        "--l-values",
        "0.5,1",
        "--out",
        d.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table: serde_json::Value = serde_json::from_reader(std::fs::File::open(d.path().join("convergence.json")).unwrap()).unwrap();
    assert_eq!(table["plane_time_rows"].as_array().unwrap().len(), 2);
    assert!(table["cell_size_rows"].as_array().unwrap().iter().all(|r| r["within_bound"] == true));
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["simulate", "--scenario", "/no/such/file.toml"]).status.code(), Some(1));
    assert_eq!(run(&["simulate", "--scenario", config("ex1.toml").to_str().unwrap(), "--grid", "1:0:3"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["abl", "--scenario", config("ex1.toml").to_str().unwrap()]).status.code(), Some(1));
    let d = tempfile::tempdir().unwrap();
    let blocker = d.path().join("f");
    std::fs::write(&blocker, "").unwrap();
    let o = run(&["simulate", "--scenario", config("ex1.toml").to_str().unwrap(), "--trials", "1", "--out", blocker.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
