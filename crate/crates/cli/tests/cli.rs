use std::path::PathBuf;
use std::process::{Command, Output};

fn radiokey(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_radiokey"))
        .args(args)
        .env_remove("RADIOKEY_CONFIG")
        .output()
        .expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("radiokey-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn simulate_is_reproducible() {
    let a = radiokey(&["simulate", "--seed", "3", "--trials", "5"]);
    let b = radiokey(&["simulate", "--seed", "3", "--trials", "5"]);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let report: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["config"]["seed"], 3);
    assert_eq!(report["trials"].as_array().unwrap().len(), 5);
    assert!(report.get("wall_clock_seconds").is_none());
    let c = radiokey(&["simulate", "--seed", "4", "--trials", "5"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn config_comes_from_environment() {
    let dir = scratch("env");
    let path = dir.join("run.json");
    std::fs::write(&path, r#"{"schema_version": 1, "trials": 3, "seed": 8}"#).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_radiokey"))
        .args(["simulate", "--format", "csv"])
        .env("RADIOKEY_CONFIG", &path)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 4);
    assert!(text.starts_with("trial,nuclei,pre_arrival,revealed,never,"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn config_errors_exit_with_2() {
    let dir = scratch("bad");
    let path = dir.join("bad.json");
    std::fs::write(
        &path,
        r#"{"schema_version": 1, "detector": {"epsilon_bob": 2.0}}"#,
    )
    .unwrap();
    let o = radiokey(&["bounds", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("detector"), "{}", stderr(&o));

    std::fs::write(&path, r#"{"schema_version": 1, "colour": "red"}"#).unwrap();
    let o = radiokey(&["simulate", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("colour"));

    assert_eq!(
        radiokey(&["simulate", "--trials", "0"]).status.code(),
        Some(2)
    );
    assert_eq!(
        radiokey(&["sweep", "colour", "--values", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(radiokey(&["sweep", "mu"]).status.code(), Some(2));
    assert_eq!(
        radiokey(&["isotope", "activity", "--isotope", "Xx-1"])
            .status
            .code(),
        Some(2)
    );
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn aborted_distillation_exits_with_3() {
    let o = radiokey(&["bb84", "--qubits", "4000", "--eve"]);
    assert_eq!(o.status.code(), Some(3));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["ledger"]["status"]["status"], "ABORTED");

    let o = radiokey(&["bb84", "--qubits", "4000"]);
    assert_eq!(o.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["session"]["errors"], 0);
    assert!((report["intercept_resend_qber"].as_f64().unwrap() - 0.25).abs() < 1e-15);
}

#[test]
fn verify_mode_exits_with_4_on_detection() {
    let dir = scratch("verify");
    let path = dir.join("attack.json");
    std::fs::write(
        &path,
        r#"{"schema_version": 1, "trials": 4, "attack": {"strategy": "OPAQUE", "budget": 500}}"#,
    )
    .unwrap();
    let config = path.to_str().unwrap();
    let o = radiokey(&["simulate", "--config", config, "--verify"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).contains("4 of 4 trials failed the detection test"));
    // without --verify the run is reported, not failed on detection
    let o = radiokey(&["simulate", "--config", config]);
    assert_ne!(o.status.code(), Some(4));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn bounds_and_sweep_outputs() {
    let o = radiokey(&["bounds"]);
    let b: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((b["p_fraction"].as_f64().unwrap() - 0.181_269_246_922_018).abs() < 1e-12);

    let o = radiokey(&["bounds", "--format", "csv"]);
    assert!(stdout(&o).starts_with(
        "scenario,p_translucent,p_intercept_bound,p_intercept_approx,p_fraction,combined_bound\na,"
    ));

    let dir = scratch("sweep");
    let out = dir.join("nested/mu.csv");
    let o = radiokey(&[
        "sweep",
        "mu",
        "--from",
        "0.05",
        "--to",
        "0.5",
        "--points",
        "10",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 11);
    assert!(text.starts_with("parameter,value,p_translucent,"));
    assert!(text.lines().next().unwrap().ends_with(",key_rate"));

    let o = radiokey(&[
        "sweep",
        "N",
        "--values",
        "500,1000",
        "--simulate",
        "--trials",
        "2",
        "--format",
        "json",
    ]);
    let t: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(t["parameter"], "N");
    assert!(t["rows"][1]["empirical_raw_key_length"].is_number());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn isotope_arithmetic() {
    let o = radiokey(&["isotope", "activity", "--current-ua", "1", "--hours", "1"]);
    let a: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(a["isotope"], "Sn-117m");
    assert_eq!(a["activity_bq"], 1e6);
    let nuclei = a["nuclei"].as_f64().unwrap();
    assert!((nuclei / 1.695e12 - 1.0).abs() < 1e-3);

    let o = radiokey(&["isotope", "plan", "--mu", "0.1", "--pairs", "10000"]);
    let p: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(p["required_nuclei"], 1000.0);
    assert_eq!(p["covers_plate"], true);

    let o = radiokey(&["isotope", "catalog", "--format", "csv"]);
    assert_eq!(stdout(&o).lines().count(), 6);

    let o = radiokey(&["isotope", "contamination", "--days", "22"]);
    let c: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(c.as_array().unwrap().len(), 4);

    let dir = scratch("catalog");
    let path = dir.join("cat.toml");
    std::fs::write(
        &path,
        "schema_version = 1\n[[isotope]]\nname = \"X-1\"\nhalf_life = { value = 1.0, unit = \"h\" }\nthick_target_yield_mbq_per_uah = 2.0\nrole = \"primary\"\n",
    )
    .unwrap();
    let o = radiokey(&["isotope", "activity", "--catalog", path.to_str().unwrap()]);
    let a: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(a["isotope"], "X-1");
    assert_eq!(a["activity_bq"], 2e6);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn effective_config_round_trips() {
    let o = radiokey(&["config", "--seed", "12"]);
    let text = stdout(&o);
    let dir = scratch("config");
    let path = dir.join("c.json");
    std::fs::write(&path, &text).unwrap();
    let again = radiokey(&["config", "--config", path.to_str().unwrap()]);
    assert_eq!(stdout(&again), text);
    assert!(text.contains("\"seed\": 12"));
    std::fs::remove_dir_all(&dir).unwrap();
}
