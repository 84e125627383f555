use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pcrot::ContractedRotation;
use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn pcrot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcrot")).args(args).env_remove("PCROT_JOBS").output().expect("binary runs")
}

fn json_stdout(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write_system(dir: &Path, json: &str) -> PathBuf {
    let path = dir.join("system.json");
    std::fs::write(&path, json).unwrap();
    path
}

#[test]
fn inspect_figure_one() {
    let path = data("figure1.json");
    let report = json_stdout(&pcrot(&["inspect", "--system", path.to_str().unwrap(), "--json"]));
    assert_eq!(report["chi"], serde_json::json!([0, 0]));
    assert_eq!(report["norm"], "9/10");
    let domains = report["domains"].as_array().unwrap();
    assert_eq!(domains.len(), 4);
    assert!(domains.iter().all(|d| d["status"] == "NonEmpty" || d["status"] == "non_empty"));

    let original = ContractedRotation::from_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let reparsed = ContractedRotation::from_json(&report["system"].to_string()).unwrap();
    assert_eq!(original, reparsed);

    let text = pcrot(&["inspect", "--system", path.to_str().unwrap()]);
    assert!(text.status.success());
    assert!(String::from_utf8_lossy(&text.stdout).contains("χ(b)     (0, 0)"));
}

#[test]
fn inspect_single_domain_system() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_system(dir.path(), r#"{"d":1,"A":[["1/2"]],"b":["0"]}"#);
    let report = json_stdout(&pcrot(&["inspect", "--system", path.to_str().unwrap(), "--json"]));
    assert_eq!(report["chi"], serde_json::json!([0]));
    assert_eq!(report["rho"], serde_json::json!(["2/1"]));
    let non_empty = report["domains"].as_array().unwrap().iter().filter(|d| d["status"] != "Empty" && d["status"] != "empty");
    assert_eq!(non_empty.count(), 1);
}

#[test]
fn invalid_systems_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    for bad in [r#"{"d":1,"A":[["1"]],"b":["0"]}"#, r#"{"d":2,"A":[["1/4","1/4"],["1/4","1/4"]],"b":["0","0"]}"#] {
        let path = write_system(dir.path(), bad);
        let out = pcrot(&["inspect", "--system", path.to_str().unwrap()]);
        assert!(!out.status.success());
        assert!(out.stdout.is_empty());
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    }
}

#[test]
fn certify_period_two() {
    let path = data("period_two.json");
    let out = json_stdout(&pcrot(&["certify", "--system", path.to_str().unwrap(), "--x0", "0"]));
    assert_eq!(out["verdict"]["verdict"], "certified");
    assert_eq!(out["verdict"]["q"], 2);
    assert_eq!(out["verdict"]["alpha"], serde_json::json!([[0], [1]]));
}

#[test]
fn undetermined_is_not_an_error() {
    let path = data("period_two.json");
    let out = json_stdout(&pcrot(&["certify", "--system", path.to_str().unwrap(), "--x0", "0.2", "--budget-steps", "2"]));
    assert_eq!(out["verdict"]["verdict"], "undetermined");
    assert_eq!(out["verdict"]["reason"], "step_budget");
}

#[test]
fn certify_rejects_points_outside_the_cube() {
    let path = data("period_two.json");
    assert!(!pcrot(&["certify", "--system", path.to_str().unwrap(), "--x0", "1"]).status.success());
    assert!(!pcrot(&["certify", "--system", path.to_str().unwrap(), "--x0", "0,0"]).status.success());
}

#[test]
fn scan_reports_one_orbit() {
    let path = data("period_two.json");
    let out = json_stdout(&pcrot(&["scan", "--system", path.to_str().unwrap(), "--grid", "16"]));
    assert_eq!(out["counts"]["certified"], 16);
    assert_eq!(out["orbits"].as_array().unwrap().len(), 1);
    assert_eq!(out["orbits"][0]["points"], serde_json::json!([["1/15"], ["11/15"]]));
    assert_eq!(out["asymptotically_periodic_on_sample"], true);
}

#[test]
fn raster_writes_pixmaps() {
    let dir = tempfile::tempdir().unwrap();
    let path = data("figure1.json");
    let out = pcrot(&["raster", "--system", path.to_str().unwrap(), "--resolution", "2", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let ppm = std::fs::read(dir.path().join("raster.ppm")).unwrap();
    assert!(ppm.starts_with(b"P6\n2 2\n255\n"));
    assert!(std::fs::read(dir.path().join("mask.pgm")).unwrap().starts_with(b"P5\n2 2\n255\n"));
    let csv = std::fs::read_to_string(dir.path().join("raster.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn raster_in_one_dimension_is_csv_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = data("period_two.json");
    let out = pcrot(&["raster", "--system", path.to_str().unwrap(), "--resolution", "8", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    assert!(!dir.path().join("raster.ppm").exists());
    assert!(dir.path().join("raster.csv").exists());
}

#[test]
fn sweep_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(
        &spec,
        r#"{"d":1,"matrix":{"kind":"random","denominator_bits":10,"norm_bound":"0.9"},
            "b_sampler":{"kind":"random"},"samples":6,"seed":3,"initial_grid":{"kind":"uniform","per_axis":3}}"#,
    )
    .unwrap();
    let run = |name: &str, jobs: &str| {
        let out_dir = dir.path().join(name);
        let out = pcrot(&["sweep", "--spec", spec.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "--jobs", jobs]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(out_dir.join("run_meta.json").exists());
        (std::fs::read(out_dir.join("sweep.json")).unwrap(), std::fs::read(out_dir.join("sweep.csv")).unwrap())
    };
    assert_eq!(run("a", "1"), run("b", "2"));
}

#[test]
fn verify_small_run_passes() {
    let out = pcrot(&["verify", "--systems", "6", "--samples", "60", "--oracle-systems", "30"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("pass")).count(), 10);
}

#[test]
fn verify_without_samples_is_flagged() {
    let out = pcrot(&["verify", "--systems", "0", "--samples", "0", "--oracle-systems", "0"]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().lines().all(|l| l.starts_with("pass (no samples)")));
}

#[test]
fn jobs_must_be_positive() {
    let path = data("period_two.json");
    assert!(!pcrot(&["--jobs", "0", "inspect", "--system", path.to_str().unwrap()]).status.success());
    let out = Command::new(env!("CARGO_BIN_EXE_pcrot"))
        .args(["inspect", "--system", path.to_str().unwrap()])
        .env("PCROT_JOBS", "1")
        .output()
        .unwrap();
    assert!(out.status.success());
}
