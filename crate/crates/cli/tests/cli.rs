use std::path::Path;
use std::process::{Command, Output};

use cuspdyn_cli::config::ExperimentConfig;
use serde_json::Value;

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cuspdyn"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn patterns_example_stays_within_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["patterns", "--L", "12", "--s-ratio", "e2"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let doc = json(&dir.path().join("patterns.json"));
    let last = doc["census"].as_array().unwrap().last().unwrap().clone();
    assert_eq!(last["L"], 12);
    let count = last["count"].as_f64().unwrap();
    for b in ["bound_window", "bound_total", "bound_exp"] {
        assert!(count <= last[b].as_f64().unwrap(), "{b}");
    }
}

#[test]
fn verify_reports_boundary_exponent() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "verify", "--delta0", "0.24", "--eps0", "0.01", "--eps", "0", "--delta", "0.03", "--n-samples", "200",
        "--digit-max", "1",
    ];
    let o = run(&args, dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("exponent 0/1 (boundary)"));
    let doc = json(&dir.path().join("verify.json"));
    assert_eq!(doc["exponent_report"]["exponent"], "0/1");
    assert_eq!(doc["exponent_assertion"], "boundary");
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["simulate", "--s-ratio", "2", "--s-prime-ratio", "1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("s_prime"));

    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "seed = 1\nunknown_key = 3\n").unwrap();
    let o = run(&["patterns", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));

    std::fs::write(&cfg, "model = \"profile-only\"\n").unwrap();
    let o = run(&["cover", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn emitted_config_reparses_to_the_file_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.toml");
    std::fs::write(&cfg_path, "seed = 42\nL = 15\nl_min = 8\n[bound]\ndelta0 = \"1/5\"\n").unwrap();
    let out = dir.path().join("out");
    let o = run(&["patterns", "--config", cfg_path.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0));
    let doc = json(&out.join("patterns.json"));
    let emitted: ExperimentConfig = serde_json::from_value(doc["config"].clone()).unwrap();
    let loaded = ExperimentConfig::load(&cfg_path).unwrap();
    assert_eq!(emitted, loaded);
    assert_eq!(doc["config_hash"], loaded.hash());
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.toml");
    std::fs::write(&cfg_path, "seed = 42\n").unwrap();
    let o = run(&["patterns", "--config", cfg_path.to_str().unwrap(), "--seed", "5", "--L", "14"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let doc = json(&dir.path().join("patterns.json"));
    assert_eq!(doc["config"]["seed"], 5);
    assert_eq!(doc["config"]["L"], 14);
}

#[test]
fn resume_refuses_a_different_config() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["simulate", "--n-traj", "5", "--L", "20"];
    assert_eq!(run(&base, dir.path()).status.code(), Some(0));
    let mut again = base.to_vec();
    again.push("--resume");
    assert_eq!(run(&again, dir.path()).status.code(), Some(0));
    again.extend(["--seed", "99"]);
    let o = run(&again, dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("refusing"));
}

#[test]
fn output_dir_defaults_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_cuspdyn"))
        .args(["patterns", "--L", "10"])
        .env(cuspdyn_cli::output::OUT_DIR_ENV, dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("patterns.json").exists());
}

#[test]
fn csv_files_carry_hash_and_fixed_columns() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["simulate", "--n-traj", "20", "--L", "40"], dir.path()).status.code(), Some(0));
    let traj = std::fs::read_to_string(dir.path().join("trajectories.csv")).unwrap();
    let mut lines = traj.lines();
    assert!(lines.next().unwrap().starts_with("# config_hash="));
    assert_eq!(lines.next().unwrap(), "traj,step,height,excursion_id");
    assert_eq!(lines.count(), 20 * 40);
    let exc = std::fs::read_to_string(dir.path().join("excursions.csv")).unwrap();
    assert_eq!(exc.lines().nth(1).unwrap(), "traj,excursion_id,start,end,peak_height,gap_before");
}
