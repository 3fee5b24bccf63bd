use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const R: f64 = 6_371_008.8;

fn hazgrid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hazgrid"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) {
    let out = hazgrid(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Three nodes one hex apart, 60 s between neighbors, ten residents each,
/// the only station at the west end.
fn write_line_bundle(dir: &Path) {
    let dlon = (3f64.sqrt() * 500.0 / (R * 34f64.to_radians().cos())).to_degrees();
    let lon = |i: usize| -118.0 + (i as f64 - 1.0) * dlon;
    fs::create_dir_all(dir.join("points")).unwrap();
    let mut nodes = String::from("node_id,lat,lon\n");
    let mut pop = String::from("lat,lon,value\n");
    for i in 0..3 {
        nodes += &format!("{i},34,{}\n", lon(i));
        pop += &format!("34,{},10\n", lon(i));
    }
    fs::write(dir.join("nodes.csv"), nodes).unwrap();
    fs::write(
        dir.join("edges.csv"),
        "from,to,travel_seconds,oneway\n0,1,60,0\n1,2,60,0\n",
    )
    .unwrap();
    fs::write(dir.join("points/population.csv"), pop).unwrap();
    fs::write(
        dir.join("points/stations.csv"),
        format!("lat,lon\n34,{}\n", lon(0)),
    )
    .unwrap();
}

const LINE_SCENARIO: &str = r#"{
  "name": "line",
  "transforms": {
    "POP": {"kind": "linear_capped", "cap": {"fixed": 10.0}},
    "STTFS": {"kind": "linear_capped", "cap": {"fixed": 120.0}}
  },
  "feature_weights": {"FB": {"ROS": 0.5, "FI": 0.5}, "SD": {"POP": 1.0, "MHV": 0.0}},
  "outcome_weights": {"FB": 0.0, "SD": 1.0}
}"#;

#[test]
fn synth_then_risk_writes_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let out = out.to_str().unwrap();
    let scenario = tmp.path().join("ri.json");
    fs::write(&scenario, r#"{"name": "ri"}"#).unwrap();
    ok(&[
        "synth", "--seed", "7", "--n", "20", "--m", "20", "--out", out,
    ]);
    ok(&[
        "risk",
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        out,
    ]);

    let csv = fs::read_to_string(Path::new(out).join("risk.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("q,r,base,s,ri,reachable"));
    let rows: Vec<&str> = lines.collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.split(',').count() == 6));
    let manifest = read_json(&Path::new(out).join("manifests/risk.json"));
    assert_eq!(manifest["command"]["subcommand"], "risk");
    assert!(manifest["inputs"]["bundle"].is_string());
}

#[test]
fn line_fixture_optimum_is_one_third() {
    let tmp = tempfile::tempdir().unwrap();
    let bundle = tmp.path().join("line");
    write_line_bundle(&bundle);
    let scenario = tmp.path().join("line.json");
    fs::write(&scenario, LINE_SCENARIO).unwrap();
    let out = tmp.path().join("run");
    ok(&[
        "optimize",
        "--bundle",
        bundle.to_str().unwrap(),
        "--edge-m",
        "500",
        "--cutoff-m",
        "100",
        "--scenario",
        scenario.to_str().unwrap(),
        "--mode",
        "relocate",
        "--objective",
        "avg",
        "--time-limit",
        "3600",
        "--out",
        out.to_str().unwrap(),
    ]);
    let summary = read_json(&out.join("optimize.json"));
    assert_eq!(summary["optimization"]["objective"], "0.3333333333333333");
    assert_eq!(
        summary["stations_after"],
        serde_json::json!([{ "q": 0, "r": 0 }])
    );
    assert!(summary["optimization"].get("wall_seconds").is_none());
}

#[test]
fn unknown_flag_is_usage_error() {
    let out = hazgrid(&["risk", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(hazgrid(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(hazgrid(&["--help"]).status.code(), Some(0));
}

#[test]
fn runtime_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nothing");
    let out = hazgrid(&[
        "risk",
        "--bundle",
        missing.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let out = hazgrid(&["synth", "--n", "1", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

fn pipeline(out: &Path, threads: &str) {
    let o = out.to_str().unwrap();
    ok(&["synth", "--seed", "3", "--n", "12", "--m", "12", "--out", o]);
    ok(&["tessellate", "--out", o, "--threads", threads]);
    ok(&["risk", "--preset", "RIS", "--out", o, "--threads", threads]);
    ok(&[
        "optimize",
        "--mode",
        "add",
        "--delta",
        "2",
        "--out",
        o,
        "--threads",
        threads,
    ]);
    ok(&[
        "sweep",
        "--delta-max",
        "3",
        "--out",
        o,
        "--threads",
        threads,
    ]);
    ok(&[
        "scaling",
        "--n-list",
        "2,4,6",
        "--out",
        o,
        "--threads",
        threads,
    ]);
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut all = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                all.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    all.sort();
    all
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    pipeline(&a, "1");
    pipeline(&b, "4");
    let fa = files(&a);
    let fb = files(&b);
    assert_eq!(fa.len(), fb.len());
    for ((na, ca), (nb, cb)) in fa.iter().zip(&fb) {
        assert_eq!(na, nb);
        if na.starts_with("manifests") {
            continue;
        }
        assert!(ca == cb, "{na} differs");
    }
    for name in [
        "layers.csv",
        "hexagons.geojson",
        "risk.csv",
        "optimize.json",
        "marginal.json",
        "curve.csv",
    ] {
        assert!(a.join(name).exists(), "{name}");
    }
}

#[test]
fn ingest_copies_a_bundle() {
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("line");
    write_line_bundle(&src);
    let out = tmp.path().join("run");
    ok(&[
        "ingest",
        "--input",
        src.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    let summary = read_json(&out.join("bundle.json"));
    assert_eq!(summary["nodes"], 3);
    assert_eq!(summary["edges"], 4);
    ok(&[
        "tessellate",
        "--edge-m",
        "500",
        "--cutoff-m",
        "100",
        "--out",
        out.to_str().unwrap(),
    ]);
    let region = read_json(&out.join("region.json"));
    assert_eq!(region["stations"], 1);
}
