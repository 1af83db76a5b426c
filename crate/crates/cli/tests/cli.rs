use std::process::{Command, Output};

use serde_json::Value;

use repchain::analytics::Targets;
use repchain_cli::config::{load_config, FileConfig};

fn repchain(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_repchain"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

#[test]
fn empty_config_uses_defaults() {
    let rc = load_config(None, &[]).unwrap();
    assert_eq!(rc.file, FileConfig::default());
    assert_eq!(rc.targets, Targets::new(0.8, 1.0).unwrap());
    assert_eq!(rc.chain.nodes(), 2);
}

#[test]
fn overrides_reach_their_sections() {
    let rc = load_config(None, &["T2=10".into(), "chain.repeaters=3".into(), "strategy=dejmps-1".into()]).unwrap();
    assert_eq!(rc.file.hardware.t2, 10.0);
    assert_eq!(rc.chain.hw.t2, 10.0);
    assert_eq!(rc.chain.nodes(), 5);
    assert_eq!(rc.file.chain.strategy, "dejmps-1");
}

#[test]
fn file_and_overrides_combine() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "seed = 9\n[hardware]\nT1_s = 100\nT2_s = 50\n[targets]\nF_t = 0.7\n").unwrap();
    let rc = load_config(Some(&path), &["T2_s=80".into()]).unwrap();
    assert_eq!(rc.chain.seed, 9);
    assert_eq!(rc.chain.hw.t1, 100.0);
    assert_eq!(rc.chain.hw.t2, 80.0);
    assert_eq!(rc.targets.fidelity, 0.7);
}

#[test]
fn invalid_values_exit_with_validation_code() {
    let out = repchain(&["--set", "T1=1", "--set", "T2=10", "simulate"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("T2"));
    assert_eq!(repchain(&["--set", "nonsense=1", "simulate"]).status.code(), Some(1));
    assert_eq!(repchain(&["--set", "strategy=sideways", "simulate"]).status.code(), Some(1));
    assert_eq!(repchain(&["analyze", "skr", "--fidelity", "1.5", "--rate", "1"]).status.code(), Some(1));
}

#[test]
fn unknown_file_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[hardware]\nT3_s = 1\n").unwrap();
    assert!(load_config(Some(&path), &[]).is_err());
}

#[test]
fn simulate_json_has_the_documented_fields() {
    let v = json(&repchain(&["--set", "realizations=40", "--seed", "5", "simulate"]));
    assert_eq!(v["command"], "simulate");
    assert_eq!(v["seed"], 5);
    assert_eq!(v["config"]["chain"]["realizations"], 40);
    let r = &v["result"];
    for key in ["mean_fidelity", "fidelity_std_error", "rate_hz", "rate_std_error", "mean_duration_s", "duration_std_error_s"] {
        assert!(r[key].as_f64().is_some_and(f64::is_finite), "{key}");
    }
    assert_eq!(r["realizations"], 40);
    let f = r["mean_fidelity"].as_f64().unwrap();
    assert!(f > 0.5 && f < 1.0);
    assert!(v["wall_time_s"].as_f64().is_some());
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let run = |threads: &str| {
        let mut v = json(&repchain(&["--threads", threads, "--set", "chain.repeaters=1", "--set", "realizations=60", "simulate"]));
        v.as_object_mut().unwrap().remove("wall_time_s");
        v
    };
    assert_eq!(run("1"), run("3"));
}

#[test]
fn config_echo_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.json");
    let out = repchain(&["--set", "realizations=30", "--set", "T2=3", "--seed", "11", "--out", first.to_str().unwrap(), "simulate"]);
    assert!(out.status.success());
    let again = json(&repchain(&["--config", first.to_str().unwrap(), "simulate"]));
    let first: Value = serde_json::from_str(&std::fs::read_to_string(&first).unwrap()).unwrap();
    assert_eq!(first["config"], again["config"]);
    assert_eq!(first["result"], again["result"]);
}

#[test]
fn optimize_csv_logs_every_generation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("log.csv");
    let out = repchain(&[
        "--set", "population=10", "--set", "generations=4", "--set", "optimizer.realizations=20",
        "--set", "hill_climb_budget=10", "--format", "csv", "--out", path.to_str().unwrap(), "optimize",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rows.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, repchain_cli::commands::LOG_COLUMNS);
    let records: Vec<_> = rows.records().map(Result::unwrap).collect();
    assert_eq!(records.len(), 5);
    let best: Vec<f64> = records.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(best.windows(2).all(|w| w[1] <= w[0]));
    let best_json: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("log.csv.best.json")).unwrap()).unwrap();
    assert!(best_json["best"]["T2_s"].as_f64().is_some());
}

#[test]
fn analyses_produce_tables() {
    let v = json(&repchain(&["analyze", "max-distance", "--repeaters", "0,1"]));
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for r in rows {
        assert!(r["swap_asap_km"].as_f64().unwrap() <= r["rate_only_km"].as_f64().unwrap());
    }
    let v = json(&repchain(&["analyze", "skr", "--fidelity", "0.99", "--rate", "2"]));
    let skr = v["secret_key_rate_hz"].as_f64().unwrap();
    assert!(skr > 0.0 && skr < 2.0);
    let v = json(&repchain(&["--set", "strategy=dejmps-2", "analyze", "waiting-time"]));
    let levels = v["levels"].as_array().unwrap();
    assert_eq!(levels.len(), 3);
    assert!(levels.windows(2).all(|w| w[1]["waiting_time_s"].as_f64() > w[0]["waiting_time_s"].as_f64()));
}
