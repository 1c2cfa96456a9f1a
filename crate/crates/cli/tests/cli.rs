use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pidtwin_core::{fixtures, parse_graph_json, SourceDoc};
use tempfile::TempDir;

const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data");

fn pidtwin(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pidtwin"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// A scratch directory holding a copy of the test data.
fn workdir() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    for entry in fs::read_dir(DATA).unwrap() {
        let path = entry.unwrap().path();
        fs::copy(&path, dir.path().join(path.file_name().unwrap())).unwrap();
    }
    dir
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn data_files_match_fixtures() {
    assert_eq!(fs::read_to_string(PathBuf::from(DATA).join("demo.pidl")).unwrap(), fixtures::DEMO_PLANT);
    assert_eq!(fs::read_to_string(PathBuf::from(DATA).join("recycle.pidl")).unwrap(), fixtures::RECYCLE_PLANT);
}

#[test]
fn ingest_round_trips() {
    let dir = workdir();
    let out = pidtwin(dir.path(), &["ingest", "demo.pidl", "-o", "demo.twin.json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(out.stdout.is_empty());
    let text = read(dir.path(), "demo.twin.json");
    let g = parse_graph_json(&SourceDoc::graph_json("demo.twin.json", text.clone())).unwrap();
    assert_eq!(g, fixtures::demo_plant());

    let again = pidtwin(dir.path(), &["ingest", "demo.twin.json", "-o", "again.twin.json"]);
    assert_eq!(code(&again), 0, "{}", stderr(&again));
    assert_eq!(read(dir.path(), "again.twin.json"), text);
}

#[test]
fn broken_reference_is_a_load_error() {
    let dir = workdir();
    pidtwin(dir.path(), &["ingest", "demo.pidl", "-o", "demo.twin.json"]);
    let text = read(dir.path(), "demo.twin.json").replacen(r#""node":"K1""#, r#""node":"K9""#, 1);
    fs::write(dir.path().join("broken.twin.json"), text).unwrap();
    let out = pidtwin(dir.path(), &["validate", "broken.twin.json"]);
    assert_eq!(code(&out), 1);
    let err = stderr(&out);
    assert!(err.contains("broken.twin.json") && err.contains("K9"), "{err}");
}

#[test]
fn pidl_errors_are_located() {
    let dir = workdir();
    fs::write(dir.path().join("bad.pidl"), "node S1 type=source flow=10\npipe E1: S1.out1 -> K1.in1\n").unwrap();
    let out = pidtwin(dir.path(), &["ingest", "bad.pidl", "-o", "bad.json"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("bad.pidl:2:"), "{}", stderr(&out));
    assert!(!dir.path().join("bad.json").exists());
}

#[test]
fn validate_exit_codes() {
    let dir = workdir();
    let ok = pidtwin(dir.path(), &["validate", "demo.pidl", "--profile", "dynamic"]);
    assert_eq!(code(&ok), 0, "{}", stderr(&ok));

    fs::write(dir.path().join("c5.pidl"), fixtures::defects::C5_FRACTIONS).unwrap();
    let bad = pidtwin(dir.path(), &["validate", "c5.pidl"]);
    assert_eq!(code(&bad), 2);
    assert!(stderr(&bad).contains("C5 error SP1"), "{}", stderr(&bad));
    assert!(bad.stdout.is_empty());
}

#[test]
fn solver_errors_exit_3() {
    let dir = workdir();
    let text = fixtures::SPLITTER_PLANT.replace("node S1 type=source flow=10", "node S1 type=source");
    fs::write(dir.path().join("nosource.pidl"), text).unwrap();
    let out = pidtwin(dir.path(), &["solve", "nosource.pidl", "-o", "sol.json"]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
}

#[test]
fn usage_errors_exit_1() {
    let dir = workdir();
    for args in [
        &["frobnicate"][..],
        &["ingest", "demo.pidl"],
        &["export", "demo.pidl", "--format", "svg", "-o", "x"],
        &["filter", "demo.pidl", "--profile", "nonesuch", "-o", "x"],
        &["ingest", "missing.pidl", "-o", "x"],
    ] {
        let out = pidtwin(dir.path(), args);
        assert_eq!(code(&out), 1, "{args:?}: {}", stderr(&out));
    }
    for args in [&["--version"][..], &["--help"], &["merge", "--help"], &["pipeline", "--help"]] {
        assert_eq!(code(&pidtwin(dir.path(), args)), 0, "{args:?}");
    }
}

#[test]
fn recycle_pipeline_gives_product_flow() {
    let dir = workdir();
    let config = r#"{
      "inputs": ["recycle.pidl"],
      "steps": [
        {"step": "ingest"},
        {"step": "filter", "params": {"profile": "steady"}},
        {"step": "validate"},
        {"step": "rewrite", "params": {"rules": "rules.json"}},
        {"step": "solve", "params": {"output": "recycle.solution.json"}},
        {"step": "export", "params": {"format": "simspec"}}
      ],
      "output": "recycle.sim.json"
    }"#;
    fs::write(dir.path().join("full.json"), config).unwrap();
    let out = pidtwin(dir.path(), &["pipeline", "full.json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let solution: serde_json::Value = serde_json::from_str(&read(dir.path(), "recycle.solution.json")).unwrap();
    let product = solution["flows"]["E5.b"].as_f64().unwrap();
    assert!((product - 10.0).abs() <= 1e-9, "{product}");
    let recycle = solution["flows"]["E4.a"].as_f64().unwrap();
    assert!((recycle - 2.5).abs() <= 1e-9, "{recycle}");
    let sim: serde_json::Value = serde_json::from_str(&read(dir.path(), "recycle.sim.json")).unwrap();
    assert_eq!(sim["simulator_name"], "generic-sim");
}

#[test]
fn pipeline_halts_on_validation_errors() {
    let dir = workdir();
    fs::write(dir.path().join("c4.pidl"), fixtures::defects::C4_MISSING_ATTR).unwrap();
    let config = r#"{"inputs":["c4.pidl"],"steps":[{"step":"ingest"},{"step":"validate"},
        {"step":"solve","params":{"output":"sol.json"}}],"output":"out.json"}"#;
    fs::write(dir.path().join("p.json"), config).unwrap();
    let out = pidtwin(dir.path(), &["pipeline", "p.json"]);
    assert_eq!(code(&out), 2);
    assert!(!dir.path().join("sol.json").exists());
    assert!(!dir.path().join("out.json").exists());
}

#[test]
fn merge_reports_conflicts() {
    let dir = workdir();
    fs::write(dir.path().join("a.pidl"), fixtures::MERGE_2D).unwrap();
    fs::write(dir.path().join("b.pidl"), fixtures::MERGE_3D.replace("volume=5.0000001", "volume=5.5")).unwrap();
    let out = pidtwin(dir.path(), &["merge", "a.pidl", "b.pidl", "-o", "m.json", "--conflicts", "c.json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let conflicts: serde_json::Value = serde_json::from_str(&read(dir.path(), "c.json")).unwrap();
    assert_eq!(conflicts.as_array().unwrap().len(), 1);
    assert_eq!(conflicts[0]["tag"], "R1");
    assert!(stderr(&out).contains("conflict"));
}

#[test]
fn exports_write_each_format() {
    let dir = workdir();
    for format in ["dot", "graphml"] {
        let name = format!("demo.{format}");
        let out = pidtwin(dir.path(), &["export", "demo.pidl", "--format", format, "-o", &name]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        assert!(!read(dir.path(), &name).is_empty());
    }
    let out = pidtwin(dir.path(), &["export", "demo.pidl", "--format", "simspec", "-o", "s.json"]);
    assert_eq!(code(&out), 1, "simspec needs stream nodes");
}
