use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;
use transience::gadgets::GadgetInfo;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_transience"))
}

fn scenarios() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios"))
}

fn run_scenario(text: &str, dir: &TempDir, extra: &[&str]) -> Output {
    let file = dir.path().join("scenario.json");
    fs::write(&file, text).unwrap();
    bin().arg("run").arg(&file).arg("--out-dir").arg(dir.path().join("out")).args(extra).output().unwrap()
}

#[test]
fn lists_gadgets() {
    let out = bin().arg("list-gadgets").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("gamblers_ruin"));
    assert!(text.contains("no_optimal_ladder"));
}

#[test]
fn gadget_schema_round_trips() {
    let out = bin().args(["list-gadgets", "--json"]).output().unwrap();
    let parsed: Vec<GadgetInfo> = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(parsed, transience::gadgets::list_gadgets());
    let again = serde_json::to_string_pretty(&parsed).unwrap();
    assert_eq!(again.trim(), String::from_utf8(out.stdout).unwrap().trim());
}

const SWEEP: &str = r#"{
  "name": "sweep",
  "seed": 5,
  "mdp": { "gadget": "gamblers_ruin", "p": 0.5 },
  "task": { "simulate": { "horizon": 10000, "runs": 300, "proxy": { "revisit_cap": 30 } } },
  "sweep": { "param": "p", "values": [0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9] }
}"#;

#[test]
fn sweep_is_monotone_and_crosses_one_half() {
    let dir = TempDir::new().unwrap();
    let out = run_scenario(SWEEP, &dir, &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut r = csv::Reader::from_path(dir.path().join("out/sweep.csv")).unwrap();
    assert_eq!(r.headers().unwrap().iter().collect::<Vec<_>>(), ["p", "estimate", "half_width_95", "lower", "upper", "runs", "horizon"]);
    let rows: Vec<(f64, f64)> = r
        .records()
        .map(|rec| {
            let rec = rec.unwrap();
            (rec[0].parse().unwrap(), rec[1].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 7);
    assert!(rows.windows(2).all(|w| w[0].1 <= w[1].1 + 0.02), "{rows:?}");
    for &(p, est) in &rows {
        if p <= 0.5 {
            assert!(est <= 0.02, "p={p}: {est}");
        }
        if p >= 0.7 {
            assert!(est >= 0.98, "p={p}: {est}");
        }
    }
}

#[test]
fn outputs_are_byte_identical() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    assert!(run_scenario(SWEEP, &a, &["--jobs", "1"]).status.success());
    assert!(run_scenario(SWEEP, &b, &["--jobs", "3"]).status.success());
    assert_eq!(fs::read(a.path().join("out/sweep.csv")).unwrap(), fs::read(b.path().join("out/sweep.csv")).unwrap());
}

#[test]
fn seed_flag_overrides_scenario() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let text = SWEEP.replace("[0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]", "[0.6]");
    assert!(run_scenario(&text, &a, &["--seed", "5"]).status.success());
    assert!(run_scenario(&text, &b, &["--seed", "6"]).status.success());
    let ra = fs::read(a.path().join("out/sweep.csv")).unwrap();
    assert_ne!(ra, fs::read(b.path().join("out/sweep.csv")).unwrap());
    let c = TempDir::new().unwrap();
    assert!(run_scenario(&text, &c, &[]).status.success());
    assert_eq!(ra, fs::read(c.path().join("out/sweep.csv")).unwrap());
}

#[test]
fn ladder_synthesis_attains_ninety_percent() {
    let dir = TempDir::new().unwrap();
    let text = fs::read_to_string(scenarios().join("ladder_md.json")).unwrap();
    let out = run_scenario(&text, &dir, &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("out/ladder_md.json")).unwrap()).unwrap();
    assert!(report["attained_lower"].as_f64().unwrap() >= 0.9, "{report}");
    let strategy = fs::read_to_string(dir.path().join("out/ladder_md.strategy.json")).unwrap();
    assert!(transience::mdp::MdStrategy::from_json(&strategy).is_ok());
}

#[test]
fn verify_conditioned_passes() {
    let dir = TempDir::new().unwrap();
    let out = bin().args(["verify", "conditioned", "--out-dir"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let reports: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("verify_conditioned.json")).unwrap()).unwrap();
    assert!(reports.as_array().unwrap().iter().all(|r| r["passed"] == true));
}

#[test]
fn finite_file_paths_are_relative_to_the_scenario() {
    let dir = TempDir::new().unwrap();
    let out = bin()
        .arg("run")
        .arg(scenarios().join("coin_plastering.json"))
        .arg("--out-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("coin_plastering.json")).unwrap()).unwrap();
    assert!((report["attained_lower"].as_f64().unwrap() - report["value"].as_f64().unwrap()).abs() <= 0.05);
}

#[test]
fn parse_errors_name_line_and_field() {
    let dir = TempDir::new().unwrap();
    let text = "{\n  \"name\": \"x\",\n  \"mdp\": { \"gadget\": \"acyclic_chain\" },\n  \"task\": { \"simulate\": { \"horizon\": \"long\", \"runs\": 1 } }\n}";
    let out = run_scenario(text, &dir, &[]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains(":4:"), "{err}");
    assert!(err.contains("task.simulate.horizon"), "{err}");
}

#[test]
fn validation_errors_name_the_field() {
    let dir = TempDir::new().unwrap();
    let text = r#"{"name": "x", "mdp": {"gadget": "no_optimal_ladder"},
        "task": {"synthesize": {"kind": "transience_md", "epsilon": 1.5}}}"#;
    let out = run_scenario(text, &dir, &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("task.synthesize.epsilon"));
}

#[test]
fn unknown_gadget_is_an_error() {
    let dir = TempDir::new().unwrap();
    let text = r#"{"name": "x", "mdp": {"gadget": "nope"},
        "task": {"simulate": {"horizon": 10, "runs": 1}}}"#;
    let out = run_scenario(text, &dir, &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("nope"));
}
