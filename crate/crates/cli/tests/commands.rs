use std::fs;
use std::path::Path;
use std::process::Command;

use clap::Parser;
use seisqubo_cli::{run, Cli, OracleDocument, ResultDocument};

fn run_args(args: &[&str]) -> seisqubo_cli::Result<Vec<std::path::PathBuf>> {
    let cli = Cli::try_parse_from(std::iter::once("seisqubo").chain(args.iter().copied())).unwrap();
    run(&cli)
}

fn out(dir: &Path) -> &str {
    dir.to_str().unwrap()
}

fn time_column(path: &Path) -> Vec<f64> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let col = r.headers().unwrap().iter().position(|h| h == "time_s").unwrap();
    r.records().map(|row| row.unwrap()[col].parse().unwrap()).collect()
}

#[test]
fn forward_constant_profile_single_layer() {
    let dir = tempfile::tempdir().unwrap();
    let profile = dir.path().join("c.csv");
    fs::write(&profile, "depth_m,speed_mps\n0,1500\n1500,1500\n").unwrap();
    run_args(&["forward", "--profile", profile.to_str().unwrap(), "--boundaries", "1500", "--theta0", "0", "--out", out(dir.path())]).unwrap();
    assert_eq!(time_column(&dir.path().join("times.csv")), vec![2.0]);
}

#[test]
fn forward_steep_angle_stretches_paths() {
    let dir = tempfile::tempdir().unwrap();
    let profile = dir.path().join("c.csv");
    fs::write(&profile, "depth_m,speed_mps\n0,1500\n3000,1500\n").unwrap();
    run_args(&["forward", "--profile", profile.to_str().unwrap(), "--boundaries", "1000,3000", "--theta0", "80", "--out", out(dir.path())]).unwrap();
    let t = time_column(&dir.path().join("times.csv"));
    let factor = 5.758770483143634;
    assert!((t[0] - 2.0 * 1000.0 * factor / 1500.0).abs() < 1e-9);
    assert!((t[1] - 2.0 * 3000.0 * factor / 1500.0).abs() < 1e-9);
}

#[test]
fn forward_46_layers_gives_46_rows() {
    let dir = tempfile::tempdir().unwrap();
    run_args(&["forward", "--synthetic", "--layers", "46", "--theta0", "0", "--out", out(dir.path())]).unwrap();
    assert_eq!(time_column(&dir.path().join("times.csv")).len(), 46);
}

#[test]
fn forward_invert_compare_closes_the_loop() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let model = ["--synthetic", "--synthetic-depth", "1200", "--boundaries", "250,600,900,1200", "--theta0", "30"];
    let with = |verb: &str, extra: &[&str]| {
        let mut a = vec![verb];
        a.extend_from_slice(&model);
        a.extend_from_slice(extra);
        a.extend_from_slice(&["--out", out(d)]);
        run_args(&a).unwrap()
    };
    with("forward", &[]);
    let times = d.join("times.csv");
    with("invert", &["--times", times.to_str().unwrap(), "--sampler", "exact"]);
    with("oracle", &["--times", times.to_str().unwrap()]);
    run_args(&[
        "compare",
        "--result",
        d.join("result.json").to_str().unwrap(),
        "--reference",
        d.join("oracle.json").to_str().unwrap(),
        "--out",
        out(d),
    ])
    .unwrap();
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("comparison.json")).unwrap()).unwrap();
    assert!(report["max_rel_error"].as_f64().unwrap() <= 1e-4);
    let csv = fs::read_to_string(d.join("comparison.csv")).unwrap();
    assert!(csv.starts_with("layer,depth_m,v_classical,v_quantum,rel_error\n"));
    assert_eq!(csv.lines().count(), 5);

    let result: ResultDocument = serde_json::from_str(&fs::read_to_string(d.join("result.json")).unwrap()).unwrap();
    assert!(result.trace.len() <= 20);
    assert_eq!(result.metadata.num_binary_vars, 12);
    let profiles = fs::read_to_string(d.join("profiles.csv")).unwrap();
    assert_eq!(profiles.lines().count(), 1 + 4 * (result.trace.len() + 1));
    let trace = fs::read_to_string(d.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 1 + result.trace.len());
}

#[test]
fn invert_records_46_layer_problem_size() {
    let dir = tempfile::tempdir().unwrap();
    run_args(&[
        "invert", "--synthetic", "--layers", "46", "--theta0", "0", "--iterations", "1", "--reads", "4", "--sweeps", "10",
        "--gauges", "2", "--out", out(dir.path()),
    ])
    .unwrap();
    let result: ResultDocument =
        serde_json::from_str(&fs::read_to_string(dir.path().join("result.json")).unwrap()).unwrap();
    assert_eq!(result.metadata.num_binary_vars, 138);
    assert_eq!(result.metadata.num_layers, 46);
    assert_eq!(result.trace.len(), 1);
}

#[test]
fn oracle_reports_conditioning() {
    let dir = tempfile::tempdir().unwrap();
    run_args(&["oracle", "--synthetic", "--layers", "10", "--theta0", "25", "--out", out(dir.path())]).unwrap();
    let doc: OracleDocument = serde_json::from_str(&fs::read_to_string(dir.path().join("oracle.json")).unwrap()).unwrap();
    assert_eq!(doc.conditioning.kappa_inf, 1.0);
    assert_eq!(doc.conditioning.solution_rel_error_bound, 1e-3);
    assert_eq!(doc.slowness.len(), 10);
}

#[test]
fn qubo_dump_scalar_by_hand() {
    let dir = tempfile::tempdir().unwrap();
    let profile = dir.path().join("u.csv");
    fs::write(&profile, "depth_m,speed_mps\n0,1\n1,1\n").unwrap();
    run_args(&[
        "qubo-dump", "--profile", profile.to_str().unwrap(), "--boundaries", "1", "--theta0", "0", "--s0", "1",
        "--half-width", "0.5", "--bits", "1", "--out", out(dir.path()),
    ])
    .unwrap();
    // M = [2], t = [2], b = (2 + 0.5·2 − 2·1)/0.5 = 2: Q = 4 − 2·2·2, C = 4.
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("qubo.json")).unwrap()).unwrap();
    assert_eq!(doc["n"], 1);
    assert_eq!(doc["entries"], serde_json::json!([[0, 0, -4.0]]));
    assert_eq!(doc["offset"], 4.0);
}

#[test]
fn qubo_dump_46_layers_is_dense() {
    let dir = tempfile::tempdir().unwrap();
    run_args(&["qubo-dump", "--synthetic", "--layers", "46", "--theta0", "0", "--out", out(dir.path())]).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("qubo.json")).unwrap()).unwrap();
    assert_eq!(doc["n"], 138);
    let entries = doc["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 9591);
    for e in entries {
        assert!(e[0].as_u64().unwrap() <= e[1].as_u64().unwrap());
    }
}

#[test]
fn compare_rejects_dimension_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let a = d.join("a");
    let b = d.join("b");
    run_args(&["invert", "--synthetic", "--layers", "2", "--theta0", "0", "--sampler", "exact", "--iterations", "2", "--out", out(&a)]).unwrap();
    run_args(&["oracle", "--synthetic", "--layers", "3", "--theta0", "0", "--out", out(&b)]).unwrap();
    let err = run_args(&[
        "compare",
        "--result",
        a.join("result.json").to_str().unwrap(),
        "--reference",
        b.join("oracle.json").to_str().unwrap(),
        "--out",
        out(d),
    ])
    .unwrap_err();
    assert_eq!(err.kind(), "dimension_mismatch");
}

fn binary(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_seisqubo")).args(args).output().unwrap()
}

fn single_error_line(o: &std::process::Output) -> serde_json::Value {
    assert!(!o.status.success());
    let stderr = String::from_utf8(o.stderr.clone()).unwrap();
    assert_eq!(stderr.lines().count(), 1, "{stderr}");
    serde_json::from_str(stderr.trim()).unwrap()
}

#[test]
fn binary_reports_errors_as_one_json_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "depth,speed\n0,1500\n").unwrap();
    let e = single_error_line(&binary(&["forward", "--profile", bad.to_str().unwrap(), "--layers", "2", "--theta0", "0"]));
    assert_eq!(e["error"], "invalid_profile");

    let e = single_error_line(&binary(&["forward", "--synthetic", "--layers", "2", "--theta0", "90"]));
    assert_eq!(e["error"], "out_of_range");

    let e = single_error_line(&binary(&["invert", "--synthetic", "--layers", "9", "--theta0", "0", "--sampler", "exact"]));
    assert_eq!(e["error"], "too_large");

    let e = single_error_line(&binary(&["forward", "--synthetic", "--profile", "x.csv", "--layers", "2", "--theta0", "0"]));
    assert_eq!(e["error"], "usage");

    let ok = binary(&["forward", "--synthetic", "--layers", "2", "--theta0", "0", "--out", dir.path().to_str().unwrap()]);
    assert!(ok.status.success());
}
