use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fedload(args: &[&str], root: &Path) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_fedload"))
        .args(args)
        .env("FEDLOAD_OUTPUT_ROOT", root)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "fedload {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn data_pipeline_from_generation_to_clustering() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let data = root.join("data.csv");
    fedload(
        &["gen-data", "--clients", "4", "--days", "7", "--seed", "3", "--out", data.to_str().unwrap()],
        root,
    );
    let text = fs::read_to_string(&data).unwrap();
    assert!(text.starts_with("client_id,acorn_group,timestamp_iso8601,kwh\n"));
    assert_eq!(text.lines().count(), 1 + 4 * 7 * 24);

    let prep = root.join("prep");
    let d = data.to_str().unwrap();
    fedload(&["preprocess", "-i", d, "--cadence", "hourly", "-o", prep.to_str().unwrap()], root);
    let summary = fs::read_to_string(prep.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 5);
    assert!(prep.join("cleaned.csv").exists());

    let cl = root.join("cl");
    let out = fedload(&["cluster", "-i", d, "--cadence", "hourly", "-k", "2", "-o", cl.to_str().unwrap()], root);
    let selection: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(selection["ids"].as_array().unwrap().len(), 2);
    assert!(cl.join("correlation.csv").exists() && cl.join("selection.json").exists());
}

#[test]
fn accountant_prints_epsilon_and_breakdown() {
    let dir = tempfile::tempdir().unwrap();
    let out = fedload(&["accountant", "--rounds", "100", "--q", "0.1", "--z", "0.9"], dir.path());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("epsilon,best_alpha,delta"));
    let eps: f64 = lines.next().unwrap().split(',').next().unwrap().parse().unwrap();
    assert!(eps > 1.0 && eps < 20.0);
    assert_eq!(lines.next(), Some(""));
    assert_eq!(lines.next(), Some("alpha,rdp,epsilon"));
}

#[test]
fn simulate_writes_a_report_that_checks_out() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let args = [
        "simulate",
        "--scenario",
        "A",
        "--set",
        "federation_sizes=[2]",
        "--set",
        "federation.rounds=2",
        "--set",
        "data.groups=[{n_clients=2,days=6}]",
        "--set",
        "model.encoder=4",
        "--set",
        "model.decoder=4",
        "--output-dir",
        "run",
        "--quiet",
    ];
    let out = fedload(&args, root);
    assert!(stdout(&out).starts_with("federation_size,mse,rmse,mae,mape"));
    let run = root.join("run");
    for f in ["config.toml", "fingerprint.txt", "results.csv", "rounds.jsonl"] {
        assert!(run.join(f).exists(), "{f}");
    }
    let report = fedload(&["report", run.to_str().unwrap()], root);
    assert!(stdout(&report).contains("ok"));

    let again = fedload(&args, root);
    assert_eq!(stdout(&again), stdout(&out).replace(&time_column(&out), &time_column(&again)));
}

fn time_column(out: &Output) -> String {
    stdout(out).lines().nth(1).unwrap().rsplit(',').next().unwrap().to_string()
}

#[test]
fn dry_run_applies_overrides_and_bad_input_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = fedload(&["simulate", "--scenario", "D", "--dry-run", "--set", "federation.rounds=7"], dir.path());
    let cfg: toml::Value = toml::from_str(&stdout(&out)).unwrap();
    assert_eq!(cfg["federation"]["rounds"].as_integer(), Some(7));

    let status = Command::new(env!("CARGO_BIN_EXE_fedload")).arg("simulate").output().unwrap().status;
    assert!(!status.success());
    let bad = Command::new(env!("CARGO_BIN_EXE_fedload"))
        .args(["simulate", "--scenario", "A", "--dry-run", "--set", "no.such.key=1"])
        .output()
        .unwrap();
    assert!(!bad.status.success());
}

#[test]
fn shipped_configs_resolve() {
    let dir = tempfile::tempdir().unwrap();
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(configs).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            fedload(&["simulate", "-c", path.to_str().unwrap(), "--dry-run"], dir.path());
            seen += 1;
        }
    }
    assert!(seen >= 3);
}
