use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const TINY: &str = r#"{
  "name": "tiny",
  "epoch": "2000-01-01T12:00:00Z",
  "time": {"fsa_length_s": 9, "superframe_length_s": 9, "slot_length_s": 3, "horizon_fsa_count": 2},
  "constellation": {"geo": {"longitudes_deg": [80, 110.5, 140], "pointing_half_angle_deg": 80}},
  "ground_stations": [{"name": "Sanya", "lat_deg": 18.23, "lon_deg": 109.02}],
  "users": [{"name": "U", "kind": "geo", "longitude_deg": 60, "requirement": [1, 1, 1, 1]}],
  "ilp": {"l_min": 0, "t_m": 3}
}"#;

fn gnss_cpd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gnss-cpd")).args(args).output().expect("binary runs")
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().rev().find(|l| l.starts_with('{')).unwrap_or_else(|| panic!("no JSON on stderr: {text}"));
    serde_json::from_str(line).expect("error JSON")
}

fn write_scenario(dir: &Path, json: &str) -> String {
    let p = dir.join("scenario.json");
    fs::write(&p, json).unwrap();
    p.display().to_string()
}

#[test]
fn linkbudget_prints_every_term() {
    let out = gnss_cpd(&["linkbudget", "--freq", "40", "--dist", "450000", "--eirp", "46", "--gain", "25"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for term in ["wavelength", "free-space loss", "received power", "noise density", "C/N0", "feasible"] {
        assert!(text.contains(term), "missing {term} in\n{text}");
    }
    assert!(text.contains("-237.55"));
    assert!(text.contains("34.43"));

    let out = gnss_cpd(&["linkbudget", "--freq", "26.5", "--dist", "450000", "--eirp", "48", "--gain", "27", "--json"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["cn0_dbhz"].as_f64().unwrap() - 42.01).abs() < 0.02);
    assert_eq!(v["feasible"], true);
}

#[test]
fn config_errors_exit_2_with_json() {
    for args in [
        &["run", "--preset", "case9"][..],
        &["run", "--fsa", "5..2"],
        &["run", "--bogus-flag"],
        &["linkbudget", "--freq", "-1", "--dist", "1", "--eirp", "0", "--gain", "0"],
    ] {
        let out = gnss_cpd(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        let v = stderr_json(&out);
        assert_eq!(v["error"]["kind"], "config", "{args:?}");
        assert_eq!(v["error"]["exit_code"], 2);
    }
}

#[test]
fn fcp_refuses_multi_slot_demand() {
    let out = gnss_cpd(&["run", "--preset", "case3*", "--scheduler", "fcp"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"]["kind"], "capability");
}

#[test]
fn infeasible_floor_exits_3_with_families() {
    let dir = tempfile::tempdir().unwrap();
    let scn = write_scenario(dir.path(), &TINY.replace(r#""l_min": 0"#, r#""l_min": 3, "ranging_floor": "strict""#));
    let out = gnss_cpd(&["run", "--scenario", &scn, "--out", &dir.path().join("o").display().to_string()]);
    assert_eq!(out.status.code(), Some(3));
    let v = stderr_json(&out);
    assert_eq!(v["error"]["kind"], "infeasible");
    assert_eq!(v["error"]["fsa"], 0);
    assert_eq!(v["error"]["superframe"], 0);
    assert!(v["error"]["families"].as_array().unwrap().iter().any(|f| f == "ranging-diversity"));
}

#[test]
fn run_writes_plan_metrics_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let scn = write_scenario(dir.path(), TINY);
    let out_dir = dir.path().join("out");
    let out = gnss_cpd(&["run", "--scenario", &scn, "--fsa", "0..2", "--seed", "7", "--out", &out_dir.display().to_string()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["solved_superframes"], 2);
    assert_eq!(summary["unmet_runs"], 0);

    let csv = fs::read_to_string(out_dir.join("plan.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("fsa,superframe,slot,node_a,node_b,kind"));
    assert!(csv.lines().any(|l| l.ends_with("gnss-user")));
    let plan: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("plan.json")).unwrap()).unwrap();
    assert_eq!(plan["superframes"].as_array().unwrap().len(), 2);

    let m: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(m["solver_seed"], 7);
    assert_eq!(m["solver"]["scheduler"], "ilp");
    assert!(m["solver"]["version"].as_str().unwrap().len() > 3);
    for f in m["outputs"].as_array().unwrap() {
        assert!(out_dir.join(f.as_str().unwrap()).exists(), "{f}");
    }

    // same inputs, same hash; a different seed changes it
    let again = dir.path().join("again");
    gnss_cpd(&["run", "--scenario", &scn, "--fsa", "0..2", "--seed", "8", "--out", &again.display().to_string()]);
    let m2: Value = serde_json::from_str(&fs::read_to_string(again.join("manifest.json")).unwrap()).unwrap();
    assert_ne!(m["config_hash"], m2["config_hash"]);
}

#[test]
fn visibility_and_lp_exports() {
    let dir = tempfile::tempdir().unwrap();
    let scn = write_scenario(dir.path(), TINY);
    let out = gnss_cpd(&["visibility", "--scenario", &scn, "--fsa", "0..=1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("fsa,node_a,node_b,visible"));
    assert!(text.lines().any(|l| l.starts_with("1,")));

    let out = gnss_cpd(&["lp", "--scenario", &scn]);
    assert!(out.status.success());
    let lp = String::from_utf8(out.stdout).unwrap();
    assert!(lp.contains("Maximize") && lp.contains("Subject To") && lp.trim_end().ends_with("End"));

    let out = gnss_cpd(&["lp", "--scenario", &scn, "--superframe", "9"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn time_limit_without_incumbent_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let out = gnss_cpd(&["run", "--preset", "case3*", "--time-limit", "0.001", "--out", &dir.path().display().to_string()]);
    assert_eq!(out.status.code(), Some(4));
    let v = stderr_json(&out);
    assert_eq!(v["error"]["kind"], "no-incumbent");
    assert_eq!(v["error"]["superframe"], 0);
}
