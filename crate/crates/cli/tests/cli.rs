use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_oran-slice"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(p: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

const ONE_BY_ONE: &str = r#"{"n_services":1,"mean_ues":1,"n_slices":1,"n_radio_units":8,"rus_per_slice":4,"n_prbs":8,"prbs_per_slice":4}"#;

fn one_by_one(dir: &TempDir) -> PathBuf {
    let cfg = write(dir, "small.json", ONE_BY_ONE);
    let out = dir.path().join("one.json");
    let r = run(&["generate", "--config", s(&cfg), "--seed", "1", "--out", s(&out)]);
    assert!(r.status.success(), "{}", stderr(&r));
    out
}

#[test]
fn same_seed_gives_identical_files_and_digest() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let ra = run(&["generate", "--seed", "7", "--out", s(&a)]);
    let rb = run(&["generate", "--seed", "7", "--out", s(&b)]);
    assert!(ra.status.success() && rb.status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let digest = |o: &Output| stdout(o).split_whitespace().nth(1).unwrap().to_string();
    assert_eq!(digest(&ra), digest(&rb));
    assert_eq!(digest(&ra).len(), 64);
}

#[test]
fn default_parameters_match_the_reference_values() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("d.json");
    assert!(run(&["generate", "--out", s(&out)]).status.success());
    let v = json(&out);
    let p = &v["scenario"]["params"];
    assert_eq!(p["bandwidth_hz"], 120e3);
    assert!((p["p_max"].as_f64().unwrap() - 10.0).abs() < 1e-12);
    assert_eq!(p["r_min"], 1.2e6);
    assert_eq!(p["c_max"], 200.0);
    assert!((p["d_max"].as_f64().unwrap() - 300e-6).abs() < 1e-18);
    assert_eq!(p["mu1"], 2e4);
    assert_eq!(p["mu2"], 2e4);
    assert_eq!(v["schema"], 1);
    assert!(v["units"].is_object());
}

#[test]
fn zero_services_is_invalid_input() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "bad.json", r#"{"n_services":0}"#);
    let r = run(&["generate", "--config", s(&cfg), "--out", s(&dir.path().join("x.json"))]);
    assert_eq!(r.status.code(), Some(2));
    assert!(stderr(&r).contains("n_services"));
}

#[test]
fn solve_one_by_one_with_trace_and_oracle() {
    let dir = TempDir::new().unwrap();
    let sc = one_by_one(&dir);
    let out = dir.path().join("r.json");
    let trace = dir.path().join("t.csv");
    let r = run(&["solve", s(&sc), "--out", s(&out), "--trace", s(&trace), "--oracle"]);
    assert!(r.status.success(), "{}", stderr(&r));
    assert!(stdout(&r).contains("feasible=true"));

    let v = json(&out);
    assert!(v["eta"].as_f64().unwrap() > 0.0);
    assert_eq!(v["mapping"]["a"], serde_json::json!([[1]]));
    assert!(v["oracle"]["gap"].is_number());

    let text = fs::read_to_string(&trace).unwrap();
    assert!(text.starts_with("# schema=1"));
    let etas: Vec<f64> = text
        .lines()
        .skip(2)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(!etas.is_empty());
    assert!(etas.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn unreachable_rate_exits_infeasible() {
    let dir = TempDir::new().unwrap();
    let sc = one_by_one(&dir);
    let mut v = json(&sc);
    v["scenario"]["params"]["r_min"] = serde_json::json!(1e12);
    fs::write(&sc, serde_json::to_string(&v).unwrap()).unwrap();
    let r = run(&["solve", s(&sc)]);
    assert_eq!(r.status.code(), Some(3));
    assert!(stderr(&r).contains("uncovered services: [0]"));
}

/// One service on every slice; each slice and the DC hold exactly their
/// mean resources.
fn mean_instance(dir: &TempDir, n_slices: usize) -> (PathBuf, PathBuf) {
    let cfg = write(
        dir,
        "mean.json",
        &format!(
            r#"{{"n_services":1,"n_slices":{n_slices},"n_dcs":1,"vnfs_per_layer":[1,1],
               "slice_demand_spread":0.0,"dc_capacity_spread":0.0}}"#
        ),
    );
    let sc = dir.path().join(format!("mean{n_slices}.json"));
    assert!(run(&["generate", "--config", s(&cfg), "--out", s(&sc)]).status.success());
    let mapping = write(dir, "all.json", &format!(r#"{{"a":[{:?}]}}"#, vec![1; n_slices]));
    (sc, mapping)
}

#[test]
fn ten_mean_slices_fill_one_dc() {
    let dir = TempDir::new().unwrap();
    let (sc, mapping) = mean_instance(&dir, 10);
    let out = dir.path().join("p.json");
    let r = run(&["place", s(&sc), "--mapping", s(&mapping), "--single-dc", "--out", s(&out)]);
    assert!(r.status.success(), "{}", stderr(&r));
    assert_eq!(json(&out)["admitted_ratio"], 1.0);
}

#[test]
fn eleventh_mean_slice_is_rejected() {
    let dir = TempDir::new().unwrap();
    let (sc, mapping) = mean_instance(&dir, 11);
    let out = dir.path().join("p.json");
    let r = run(&["place", s(&sc), "--mapping", s(&mapping), "--single-dc", "--out", s(&out)]);
    assert!(r.status.success(), "{}", stderr(&r));
    let ratio = json(&out)["admitted_ratio"].as_f64().unwrap();
    assert!((ratio - 10.0 / 11.0).abs() < 1e-12);
}

#[test]
fn place_oracle_emits_a_gap_row() {
    let dir = TempDir::new().unwrap();
    let (sc, mapping) = mean_instance(&dir, 4);
    let r = run(&["place", s(&sc), "--mapping", s(&mapping), "--oracle", "--weights", "1,100,320"]);
    assert!(r.status.success(), "{}", stderr(&r));
    let text = stdout(&r);
    assert!(text.contains("instance,oracle,heuristic,gap,wall_time_s"));
    let row = text.lines().last().unwrap();
    let gap: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
    assert!(gap.abs() < 1e-12);
}

#[test]
fn mapping_of_the_wrong_shape_is_invalid_input() {
    let dir = TempDir::new().unwrap();
    let (sc, _) = mean_instance(&dir, 3);
    let bad = write(&dir, "bad.json", r#"{"a":[[1]]}"#);
    let r = run(&["place", s(&sc), "--mapping", s(&bad)]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn bad_weights_are_rejected() {
    let dir = TempDir::new().unwrap();
    let (sc, _) = mean_instance(&dir, 2);
    let r = run(&["place", s(&sc), "--weights", "1,2"]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn oracle_guard_exits_four() {
    let dir = TempDir::new().unwrap();
    let (sc, mapping) = mean_instance(&dir, 11);
    let r = run(&["place", s(&sc), "--mapping", s(&mapping), "--oracle"]);
    assert_eq!(r.status.code(), Some(4));
}

#[test]
fn experiment_writes_versioned_csv_and_plot() {
    let dir = TempDir::new().unwrap();
    let spec = write(
        &dir,
        "spec.json",
        r#"{"kind":"admitted_vs_slices","x_values":[4,8,12],"groups":[2,5],"seeds":[1,2,3],"plot":true}"#,
    );
    let out = dir.path().join("fig.csv");
    let r = run(&["experiment", s(&spec), "--out", s(&out)]);
    assert!(r.status.success(), "{}", stderr(&r));
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# schema=1"));
    assert!(lines.next().unwrap().ends_with("trend_ok"));
    assert_eq!(lines.count(), 6);
    assert!(dir.path().join("fig.raw.csv").exists());
    assert!(fs::read_to_string(dir.path().join("fig.gp")).unwrap().contains("fig.csv"));

    // Same inputs, same bytes.
    let again = dir.path().join("again.csv");
    assert!(run(&["experiment", s(&spec), "--out", s(&again)]).status.success());
    assert_eq!(fs::read(&out).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn experiment_input_errors() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("o.csv");
    let unknown = write(&dir, "u.json", r#"{"kind":"nope","x_values":[4],"groups":[2],"seeds":[1]}"#);
    assert_eq!(run(&["experiment", s(&unknown), "--out", s(&out)]).status.code(), Some(2));
    let empty = write(&dir, "e.json", r#"{"kind":"admitted_vs_slices","x_values":[4],"groups":[2],"seeds":[]}"#);
    let r = run(&["experiment", s(&empty), "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(2));
    assert!(stderr(&r).contains("seeds"));
}

#[test]
fn missing_scenario_file_is_invalid_input() {
    let r = run(&["solve", "/nonexistent/scenario.json"]);
    assert_eq!(r.status.code(), Some(2));
}
