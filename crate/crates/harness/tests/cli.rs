use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn tsiv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tsiv")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = tsiv(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    tsiv(args).status.code().expect("exit code")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn simulated(dir: &Path) -> (String, String) {
    let d = dir.to_str().unwrap();
    ok(&["--seed", "5", "--out", d, "simulate", "--dims", "1,1,1,1", "--len", "2000"]);
    (dir.join("sample.csv").to_string_lossy().into_owned(), dir.join("params.json").to_string_lossy().into_owned())
}

#[test]
fn simulate_estimate_identify_predict() {
    let dir = tempfile::tempdir().unwrap();
    let (sample, params) = simulated(dir.path());
    assert_eq!(fs::read_to_string(&sample).unwrap().lines().count(), 2001);

    // a parameter file reproduces the drawn trajectory
    let again = ok(&["--seed", "5", "simulate", "--params", &params, "--len", "2000"]);
    assert_eq!(again, fs::read_to_string(&sample).unwrap());

    let d = dir.path().to_str().unwrap();
    ok(&["--out", d, "identify", "--params", &params]);
    assert_eq!(json(&dir.path().join("identifiability.json"))["identifiable"], true);

    ok(&["--out", d, "estimate", "--data", &sample, "--estimator", "niv_2", "--covariance"]);
    let est = json(&dir.path().join("estimate.json"));
    assert!(est["beta_hat"][0][0].as_f64().unwrap().is_finite());

    ok(&["--out", d, "predict", "--data", &sample, "--x", "-1.5"]);
    let pred = json(&dir.path().join("prediction.json"));
    assert_eq!(pred["x"][0], -1.5);
    assert!(pred["prediction"][0].as_f64().unwrap().is_finite());
}

#[test]
fn experiment_writes_tables_and_prints_the_summary() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let stdout = ok(&["--out", d, "experiment", "obs_equivalence"]);
    let summary: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(summary["meta"]["experiment"], "obs_equivalence");
    assert!(dir.path().join("obs_equivalence_autocovariances.csv").exists());
    assert_eq!(json(&dir.path().join("obs_equivalence_summary.json")), summary);
}

#[test]
fn experiment_output_is_independent_of_workers() {
    let config = tempfile::NamedTempFile::new().unwrap();
    fs::write(config.path(), r#"{"n_matrices": 3, "replicates": 2, "sample_sizes": [300, 600]}"#).unwrap();
    let cfg = config.path().to_str().unwrap();
    let mut outputs = Vec::new();
    for workers in ["1", "2"] {
        let dir = tempfile::tempdir().unwrap();
        ok(&["--config", cfg, "--workers", workers, "--out", dir.path().to_str().unwrap(), "experiment", "consistency"]);
        let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir.path())
            .unwrap()
            .map(|e| {
                let p = e.unwrap().path();
                (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
            })
            .collect();
        files.sort();
        outputs.push(files);
    }
    assert_eq!(outputs[0].len(), 3);
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn configuration_errors_exit_with_2() {
    let config = tempfile::NamedTempFile::new().unwrap();
    fs::write(config.path(), r#"{"n_matrices": 3, "no_such_key": 1}"#).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(code(&["--config", config.path().to_str().unwrap(), "--out", d, "experiment", "consistency"]), 2);
    assert_eq!(code(&["experiment", "no_such_experiment"]), 2);
    assert_eq!(code(&["--workers", "0", "--out", d, "experiment", "obs_equivalence"]), 2);
    assert_eq!(code(&["estimate", "--data", "/nonexistent/sample.csv"]), 2);
    assert_eq!(code(&["simulate"]), 2);
}

#[test]
fn numerical_failures_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let (sample, _) = simulated(dir.path());
    // a constant instrument leaves nothing to identify the effect
    let text = fs::read_to_string(&sample).unwrap();
    let mut lines = text.lines();
    let mut zeroed = vec![lines.next().unwrap().to_string()];
    for l in lines {
        let mut cells: Vec<&str> = l.split(',').collect();
        cells[1] = "0";
        zeroed.push(cells.join(","));
    }
    let path = dir.path().join("zeroed.csv");
    fs::write(&path, zeroed.join("\n") + "\n").unwrap();
    assert_eq!(code(&["estimate", "--data", path.to_str().unwrap(), "--estimator", "niv_2"]), 3);
}
