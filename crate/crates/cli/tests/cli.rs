//! End-to-end runs of the `corrsim` binary.

use std::path::Path;
use std::process::{Command, Output};

fn corrsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_corrsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn bounds_table_values() {
    let o = corrsim(&["bounds", "--k", "100,200", "--rho", "0,0.5,-0.5"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(!text.contains('\r'));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "k,rho,global_upper,local_upper,local_lower,naive_risk,max_scheme_risk");
    // 1/(2·100·ln2).
    assert!(lines[2].starts_with("100,0,0.0072134752,"));
    // ±ρ rows agree column for column after the rho field.
    let tail = |l: &str| l.splitn(3, ',').nth(2).unwrap().to_string();
    assert_eq!(tail(lines[1]), tail(lines[3]));
    let halve = |l: &str| -> Vec<f64> { tail(l).split(',').map(|v| v.parse().unwrap()).collect() };
    for (a, b) in halve(lines[2]).iter().zip(halve(lines[5])) {
        assert!((a / 2.0 - b).abs() <= 1e-9 * a);
    }
}

#[test]
fn simulate_naive_matches_the_sample_mean_variance() {
    let o = corrsim(&["simulate", "--scheme", "naive", "--k", "64", "--rho", "0", "--trials", "100000", "--seed", "5"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let mse: f64 = row[header.iter().position(|c| *c == "mse").unwrap()].parse().unwrap();
    assert!((mse * 64.0 - 1.0).abs() <= 0.05, "mse {mse}");
    assert!(String::from_utf8_lossy(&o.stderr).contains("simulate [1/1]"));
}

#[test]
fn config_errors_exit_2_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.toml");
    std::fs::write(&cfg, "rho = []\nk = [64]\n[[schemes]]\nscheme = \"naive\"\n").unwrap();
    let o = corrsim(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let err: serde_json::Value = serde_json::from_slice(o.stderr.trim_ascii()).unwrap();
    assert_eq!(err["error"]["kind"], "config");
    assert_eq!(err["error"]["message"], "empty grid");
    assert!(o.stdout.is_empty());

    let o = corrsim(&["simulate", "--scheme", "max", "--k", "30", "--rho", "0", "--full"]);
    assert_eq!(code(&o), 2);
    let o = corrsim(&["simulate", "--scheme", "block", "--k", "64", "--rho", "0"]);
    assert_eq!(code(&o), 2);
    let o = corrsim(&["verify", "--suite", "nonsense"]);
    assert_eq!(code(&o), 2);
    let o = corrsim(&["maxnormal", "--n", "0"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn config_file_drives_a_sweep_with_sorted_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    let out = dir.path().join("out.json");
    std::fs::write(
        &cfg,
        r#"
rho = [0.5, -0.5]
k = [16, 8]
trials = 200
seed = 3
format = "json"

[[schemes]]
scheme = "max"

[[schemes]]
scheme = "local"
rho_nominal = 0.5

[[schemes]]
scheme = "naive"
"#,
    )
    .unwrap();
    let o = corrsim(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["meta"]["schema"], 1);
    assert_eq!(v["meta"]["seed"], 3);
    let keys: Vec<(String, u64, f64)> = v["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| (r["scheme"].as_str().unwrap().to_string(), r["k"].as_u64().unwrap(), r["rho"].as_f64().unwrap()))
        .collect();
    assert_eq!(keys.len(), 12);
    let mut sorted = keys.clone();
    sorted.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.total_cmp(&b.2)));
    assert_eq!(keys, sorted);
    assert_eq!(keys[0], ("local".to_string(), 8, -0.5));
}

#[test]
fn verify_exit_codes_and_replay() {
    let o = corrsim(&["verify", "--suite", "chain", "--draws", "200", "--seed", "9"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("chain,200,200,0,"));

    let o = corrsim(&["verify", "--suite", "tilted", "--draws", "0"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));

    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let o = corrsim(&[
        "verify",
        "--suite",
        "shift",
        "--draws",
        "10",
        "--inject-violation",
        "--format",
        "json",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["violations"].as_array().unwrap().len(), 1);
    assert_eq!(v["violations"][0]["instance"]["kind"], "chain_joints");

    let o = corrsim(&["verify", "--replay", report.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("injected,0,false,"));
}

fn run_twice(args: &[&str], out: &Path) -> (Vec<u8>, Vec<u8>) {
    let mut full: Vec<&str> = args.to_vec();
    let path = out.to_str().unwrap();
    full.extend(["--out", path]);
    assert!(corrsim(&full).status.success());
    let first = std::fs::read(out).unwrap();
    assert!(corrsim(&full).status.success());
    (first, std::fs::read(out).unwrap())
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    for args in [
        vec!["simulate", "--scheme", "max", "--k", "10,12", "--rho", "0,0.5", "--trials", "2000", "--seed", "4"],
        vec!["simulate", "--scheme", "local", "--k", "10", "--rho", "0.6", "--trials", "500", "--format", "json"],
        vec!["bounds", "--k", "64", "--rho", "0.1,0.2"],
        vec!["verify", "--suite", "all", "--draws", "4", "--format", "json"],
        vec!["maxnormal"],
    ] {
        let (a, b) = run_twice(&args, &out);
        assert_eq!(a, b, "{args:?}");
        assert!(!a.is_empty());
    }
}
