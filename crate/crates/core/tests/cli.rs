//! End-to-end checks of the command-line interface: file formats, exit
//! codes, and byte-level determinism of the emitted CSVs.

use std::fs;
use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_budget-assign"))
}

fn workdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("budget-assign-cli-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn pipeline_generate_solve_round() {
    let dir = workdir("pipeline");
    let instance = dir.join("inst.json");
    let status = bin()
        .args(["--seed", "17", "generate", "--kind", "random", "--bins", "5", "--items", "12"])
        .args(["--zero-assign-costs", "--uniform-rewards"])
        .arg("--out")
        .arg(&instance)
        .status()
        .unwrap();
    assert!(status.success());

    let lp_out = dir.join("lp.json");
    let status = bin()
        .arg("solve-lp")
        .arg(&instance)
        .args(["--mode", "scaled", "--epsilon", "0.25"])
        .arg("--out")
        .arg(&lp_out)
        .status()
        .unwrap();
    assert!(status.success());
    let payload: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&lp_out).unwrap()).unwrap();
    assert_eq!(payload["converged"], serde_json::Value::Bool(true));
    assert!(payload["lp_value"].as_f64().unwrap() > 0.0);

    let csv = dir.join("alg1.csv");
    let status = bin()
        .args(["--seed", "3", "round"])
        .arg(&instance)
        .args(["--alg", "alg1", "--epsilon", "0.25", "--trials", "500", "--shared-randomness"])
        .arg("--out")
        .arg(&csv)
        .status()
        .unwrap();
    assert!(status.success());
    let first = fs::read(&csv).unwrap();
    assert!(first.starts_with(b"trial,objective,feasible,path\n"));

    // Same seed, same bytes.
    let status = bin()
        .args(["--seed", "3", "round"])
        .arg(&instance)
        .args(["--alg", "alg1", "--epsilon", "0.25", "--trials", "500", "--shared-randomness"])
        .arg("--out")
        .arg(&csv)
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(first, fs::read(&csv).unwrap());
}

#[test]
fn line_planning_files_load_everywhere() {
    let dir = workdir("rlpp");
    let rlpp = dir.join("grid.json");
    let status = bin()
        .args(["--seed", "5", "generate", "--kind", "rlpp-grid"])
        .args(["--width", "5", "--height", "4", "--lines", "8", "--trips", "30"])
        .args(["--budget", "12"])
        .arg("--out")
        .arg(&rlpp)
        .status()
        .unwrap();
    assert!(status.success());
    let text = fs::read_to_string(&rlpp).unwrap();
    assert!(text.contains("\"lines\""), "default emit is the line-planning schema");

    let status = bin()
        .arg("--out-dir")
        .arg(&dir)
        .args(["--seed", "2", "compare"])
        .arg(&rlpp)
        .args(["--algs", "baseline,alg6", "--trials", "400"])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(dir.join("baseline_trials.csv").exists());
    assert!(dir.join("alg6_best.csv").exists());

    // The exact oracle refuses an oversized search space with a clear error.
    let wide = dir.join("wide.json");
    let status = bin()
        .args(["--seed", "8", "generate", "--kind", "random", "--bins", "4", "--items", "40"])
        .arg("--out")
        .arg(&wide)
        .status()
        .unwrap();
    assert!(status.success());
    let output =
        bin().arg("exact").arg(&wide).arg("--out").arg(dir.join("x.json")).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("too large"), "{stderr}");
}

#[test]
fn exact_oracle_on_reduction_instance() {
    let dir = workdir("exact");
    let instance = dir.join("mkc.json");
    let status = bin()
        .args(["--seed", "3", "generate", "--kind", "mkc"])
        .args(["--elements", "5", "--sets", "3", "--cover-k", "2"])
        .arg("--out")
        .arg(&instance)
        .status()
        .unwrap();
    assert!(status.success());
    let out = dir.join("opt.json");
    let status = bin().arg("exact").arg(&instance).arg("--out").arg(&out).status().unwrap();
    assert!(status.success());
    let payload: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let objective = payload["objective"].as_f64().unwrap();
    assert!(objective >= 0.0 && objective.fract() == 0.0);
}

#[test]
fn results_independent_of_worker_count() {
    let dir = workdir("threads");
    let instance = dir.join("inst.json");
    bin()
        .args(["--seed", "21", "generate", "--kind", "random", "--bins", "6", "--items", "14"])
        .args(["--zero-assign-costs"])
        .arg("--out")
        .arg(&instance)
        .status()
        .unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let csv = dir.join(format!("t{threads}.csv"));
        let status = bin()
            .args(["--threads", threads, "--seed", "6", "round"])
            .arg(&instance)
            .args(["--alg", "alg6", "--trials", "800", "--shared-randomness"])
            .arg("--out")
            .arg(&csv)
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(fs::read(&csv).unwrap());
    }
    assert_eq!(outputs[0], outputs[1], "trial records depend on the worker count");
}

#[test]
fn usage_errors_exit_one() {
    let status = bin().args(["round", "/nonexistent.json", "--alg", "alg1", "--out", "/tmp/x.csv"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));

    let dir = workdir("usage");
    let instance = dir.join("inst.json");
    bin()
        .args(["generate", "--kind", "random"])
        .arg("--out")
        .arg(&instance)
        .status()
        .unwrap();
    let status = bin()
        .arg("round")
        .arg(&instance)
        .args(["--alg", "bogus", "--out"])
        .arg(dir.join("x.csv"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));

    let status = bin().args(["--bad-flag"]).status().unwrap();
    assert_eq!(status.code(), Some(1));

    let status = bin().args(["--help"]).status().unwrap();
    assert_eq!(status.code(), Some(0));
}
