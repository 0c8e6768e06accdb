use std::path::Path;
use std::process::{Command, Output};

use dscfq_cli::config::{parse_config, Experiment};
use dscfq_cli::CliError;
use dscfq_core::engine::TimingParams;

fn dscfq(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dscfq"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn minimal(agents: &str) -> String {
    format!(
        r#"{{
  "scenario": {{
    "agents": [{agents}],
    "scheduler": "dscfq",
    "alpha_policy": {{"kind": "fixed", "alpha": 0.04}},
    "duration": 1000000000
  }},
  "experiment": {{"kind": "run"}}
}}"#
    )
}

const AGENT: &str = r#"{"id": 0, "weight": 8, "packet_length": {"kind": "fixed", "bytes": 2016}}"#;

#[test]
fn omitted_timing_takes_table_defaults() {
    let cfg = parse_config(&minimal(AGENT)).unwrap();
    assert_eq!(cfg.scenario.timing, TimingParams::default());
    assert_eq!(cfg.scenario.m, 2);
    assert_eq!((cfg.scenario.cw_min, cfg.scenario.cw_max), (15, 1023));
    assert_eq!(cfg.seeds, vec![1]);
}

#[test]
fn negative_weight_names_the_agent() {
    let bad = AGENT.replace("\"weight\": 8", "\"weight\": -3");
    let err = parse_config(&minimal(&format!("{AGENT}, {}", bad.replace("\"id\": 0", "\"id\": 1")))).unwrap_err();
    match err {
        CliError::Config { path, message } => {
            assert_eq!(path, "scenario.agents[1].weight");
            assert!(message.contains("agent 1"), "{message}");
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn type_errors_carry_field_paths() {
    let text = minimal(AGENT).replace("\"bytes\": 2016", "\"bytes\": \"large\"");
    let err = parse_config(&text).unwrap_err();
    // Tagged enums are buffered by serde, so the path ends at the enum.
    assert!(matches!(&err, CliError::Config { path, .. } if path == "scenario.agents[0].packet_length"), "{err}");
    let text = minimal(AGENT).replace("\"duration\": 1000000000", "\"duration\": \"long\"");
    let err = parse_config(&text).unwrap_err();
    assert!(matches!(&err, CliError::Config { path, .. } if path == "scenario.duration"), "{err}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn unsorted_grid_is_rejected() {
    let text = minimal(AGENT).replace(r#"{"kind": "run"}"#, r#"{"kind": "sweep_alpha", "grid": [0.04, 0.01]}"#);
    let err = parse_config(&text).unwrap_err();
    assert!(matches!(&err, CliError::Config { path, .. } if path == "experiment.grid[1]"), "{err}");
}

#[test]
fn sweep_grid_round_trips() {
    let text = minimal(AGENT).replace(r#"{"kind": "run"}"#, r#"{"kind": "sweep_alpha", "grid": [0.01, 0.04]}"#);
    let cfg = parse_config(&text).unwrap();
    assert_eq!(cfg.experiment, Experiment::SweepAlpha { grid: vec![0.01, 0.04] });
}

#[test]
fn run_is_reproducible_and_validates() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["run", "--seeds", "3,1", "--departures", "2000", "--strict"];
    let a = dscfq(&args, &dir.path().join("a"));
    let b = dscfq(&args, &dir.path().join("b"));
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert!(b.status.success());
    let read = |d: &str, f: &str| std::fs::read(dir.path().join(d).join(f)).unwrap();
    assert_eq!(read("a", "manifest.json"), read("b", "manifest.json"));
    assert_eq!(read("a", "trace_seed3.csv"), read("b", "trace_seed3.csv"));

    let v = dscfq(
        &["validate", "--trace", dir.path().join("a/trace_seed1.csv").to_str().unwrap(), "--strict"],
        &dir.path().join("v"),
    );
    assert!(v.status.success(), "{}", String::from_utf8_lossy(&v.stderr));
    let report: serde_json::Value = serde_json::from_slice(&read("v", "violations.json")).unwrap();
    assert_eq!(report["violations"].as_array().unwrap().len(), 0);
    assert_eq!(report["departures_checked"], 2000);
}

#[test]
fn strict_validation_of_a_corrupted_trace_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let r = dscfq(&["run", "--departures", "500"], &dir.path().join("r"));
    assert!(r.status.success());
    let path = dir.path().join("r/trace_seed1.csv");
    let text = std::fs::read_to_string(&path).unwrap();
    // Push the first departure's deviation above zero.
    let mut done = false;
    let corrupted: Vec<String> = text
        .lines()
        .map(|l| {
            let mut f: Vec<&str> = l.split(',').collect();
            if !done && f[1] == "departure" {
                f[7] = "0.5";
                done = true;
            }
            f.join(",")
        })
        .collect();
    std::fs::write(&path, corrupted.join("\n") + "\n").unwrap();
    let v = dscfq(&["validate", "--trace", path.to_str().unwrap(), "--strict"], &dir.path().join("v"));
    assert_eq!(v.status.code(), Some(3));
    let lax = dscfq(&["validate", "--trace", path.to_str().unwrap()], &dir.path().join("w"));
    assert_eq!(lax.status.code(), Some(0));
}

#[test]
fn bad_flags_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(dscfq(&["run", "--alpha", "-1"], dir.path()).status.code(), Some(2));
    assert_eq!(dscfq(&["run", "--algo", "fifo"], dir.path()).status.code(), Some(2));
    assert_eq!(dscfq(&["validate"], dir.path()).status.code(), Some(2));
}

#[test]
fn env_var_sets_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_dscfq"))
        .args(["analyze", "--nbar-formula", "paper"])
        .env("DSCFQ_OUT_DIR", dir.path().join("env"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("env/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["nbar_formula"], "paper");
    assert!(dir.path().join("env/model_g.csv").exists());
}
