//! End-to-end tests of the `causal-kit` binary: exit codes, output
//! formats, constraint enforcement and byte-level reproducibility.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_causal-kit"))
}

fn run(args: &[&str]) -> Output {
    binary().args(args).output().expect("binary runs")
}

fn assert_success(output: &Output) {
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
}

fn gen_linear(dir: &Path, length: usize, seed: u64) -> PathBuf {
    let path = dir.join("panel.csv");
    let out = run(&[
        "gen",
        "linear-bench",
        "--length",
        &length.to_string(),
        "--seed",
        &seed.to_string(),
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_success(&out);
    path
}

fn gen_nonlinear(dir: &Path, length: usize, seed: u64) -> PathBuf {
    let path = dir.join("nl.csv");
    let out = run(&[
        "gen",
        "nonlinear-bench",
        "--length",
        &length.to_string(),
        "--seed",
        &seed.to_string(),
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_success(&out);
    path
}

#[test]
fn gen_produces_loadable_panel() {
    let dir = tempfile::tempdir().unwrap();
    let path = gen_linear(dir.path(), 250, 1);
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "ts1,ts2,ts3,ts4,ts5,ts6,ts7,ts8");
    assert_eq!(lines.count(), 250);
}

#[test]
fn test_command_emits_json_with_p_value() {
    let dir = tempfile::tempdir().unwrap();
    let input = gen_nonlinear(dir.path(), 200, 7);
    let out_path = dir.path().join("result.json");
    let out = run(&[
        "test",
        "--input",
        input.to_str().unwrap(),
        "--measure",
        "geweke-kernel",
        "--target",
        "z",
        "--cause",
        "x",
        "--lags",
        "1,2",
        "--permutations",
        "25",
        "--seed",
        "3",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_success(&out);
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    let p = doc["p_value"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&p));
    assert_eq!(doc["surrogates"].as_array().unwrap().len(), 25);
    assert_eq!(doc["config"]["schema_version"], 1);
    assert_eq!(doc["config"]["measure"], "geweke-kernel");
    // Resolved hyperparameters are echoed.
    assert!(doc["config"]["resolved"]["sigma"].as_f64().unwrap() > 0.0);
    assert!(doc["config"]["resolved"]["gamma"].as_f64().unwrap() > 0.0);
}

#[test]
fn transfer_entropy_rejects_side_columns() {
    let dir = tempfile::tempdir().unwrap();
    let input = gen_nonlinear(dir.path(), 120, 2);
    let out = run(&[
        "test",
        "--input",
        input.to_str().unwrap(),
        "--measure",
        "transfer-entropy",
        "--target",
        "z",
        "--cause",
        "x",
        "--side",
        "y",
        "--lags",
        "1",
        "--permutations",
        "5",
        "--seed",
        "1",
        "--out",
        dir.path().join("te.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("side information"),
        "stderr must name the constraint: {stderr}"
    );
}

#[test]
fn mutual_information_detects_instantaneous_coupling() {
    let dir = tempfile::tempdir().unwrap();
    let input = gen_linear(dir.path(), 250, 5);
    let out_path = dir.path().join("mi.json");
    let out = run(&[
        "test",
        "--input",
        input.to_str().unwrap(),
        "--measure",
        "mutual-information",
        "--target",
        "ts1",
        "--cause",
        "ts2",
        "--lags",
        "0",
        "--permutations",
        "200",
        "--seed",
        "5",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_success(&out);
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(doc["p_value"].as_f64().unwrap(), 0.0);
}

#[test]
fn matrix_round_trips_through_json_twin() {
    let dir = tempfile::tempdir().unwrap();
    let input = gen_linear(dir.path(), 150, 9);
    let stem = dir.path().join("matrix");
    let out = run(&[
        "matrix",
        "--input",
        input.to_str().unwrap(),
        "--measure",
        "transfer-entropy",
        "--lags",
        "1",
        "--permutations",
        "40",
        "--seed",
        "11",
        "--out",
        stem.to_str().unwrap(),
    ]);
    assert_success(&out);

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(stem.with_extension("json")).unwrap())
            .unwrap();
    let p_values = json["p_values"].as_array().unwrap();
    assert_eq!(p_values.len(), 8);
    assert!(p_values[0][0].is_null());

    // The CSV re-read matches the JSON twin exactly.
    let csv_text = std::fs::read_to_string(stem.with_extension("csv")).unwrap();
    let mut lines = csv_text.lines();
    assert!(lines.next().unwrap().starts_with("# config:"));
    let header = lines.next().unwrap();
    assert!(header.starts_with("target\\cause,ts1,"));
    for (i, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells[0], format!("ts{}", i + 1));
        for (j, cell) in cells[1..].iter().enumerate() {
            let json_cell = &p_values[i][j];
            if i == j {
                assert!(cell.is_empty());
                assert!(json_cell.is_null());
            } else {
                assert_eq!(cell.parse::<f64>().unwrap(), json_cell.as_f64().unwrap());
            }
        }
    }
}

#[test]
fn matrix_requires_two_columns() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("one.csv"), "a\n1\n2\n3\n").unwrap();
    let out = run(&[
        "matrix",
        "--input",
        dir.path().join("one.csv").to_str().unwrap(),
        "--measure",
        "geweke-linear",
        "--lags",
        "1",
        "--seed",
        "1",
        "--out",
        dir.path().join("m").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_input_is_a_data_error() {
    let out = run(&[
        "test",
        "--input",
        "/nonexistent/panel.csv",
        "--measure",
        "geweke-linear",
        "--target",
        "a",
        "--cause",
        "b",
        "--lags",
        "1",
        "--out",
        "/tmp/unused.json",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn scan_row_counts() {
    let dir = tempfile::tempdir().unwrap();
    let input = gen_nonlinear(dir.path(), 500, 4);
    let out_path = dir.path().join("scan.csv");
    let out = run(&[
        "scan",
        "--input",
        input.to_str().unwrap(),
        "--measure",
        "geweke-linear",
        "--target",
        "z",
        "--cause",
        "x",
        "--lags",
        "1",
        "--window",
        "250",
        "--step",
        "25",
        "--permutations",
        "5",
        "--seed",
        "2",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_success(&out);
    let text = std::fs::read_to_string(&out_path).unwrap();
    let data_rows: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("window_start"))
        .collect();
    // 11 windows x 2 directions.
    assert_eq!(data_rows.len(), 22);
    assert!(data_rows.iter().any(|r| r.contains("x->z")));
    assert!(data_rows.iter().any(|r| r.contains("z->x")));

    // Side information adds the conditional pair.
    let cond_path = dir.path().join("scan_cond.csv");
    let out = run(&[
        "scan",
        "--input",
        input.to_str().unwrap(),
        "--measure",
        "geweke-linear",
        "--target",
        "z",
        "--cause",
        "x",
        "--side",
        "y",
        "--lags",
        "1",
        "--window",
        "250",
        "--step",
        "25",
        "--permutations",
        "5",
        "--seed",
        "2",
        "--out",
        cond_path.to_str().unwrap(),
    ]);
    assert_success(&out);
    let text = std::fs::read_to_string(&cond_path).unwrap();
    let rows: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("window_start"))
        .collect();
    assert_eq!(rows.len(), 44);
    assert!(rows.iter().any(|r| r.contains("x->z|y")));
}

#[test]
fn scan_without_window_plan_uses_full_length() {
    let dir = tempfile::tempdir().unwrap();
    let input = gen_nonlinear(dir.path(), 300, 6);
    let out_path = dir.path().join("scan.csv");
    let out = run(&[
        "scan",
        "--input",
        input.to_str().unwrap(),
        "--measure",
        "transfer-entropy",
        "--target",
        "z",
        "--cause",
        "x",
        "--lags",
        "2",
        "--permutations",
        "5",
        "--seed",
        "2",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_success(&out);
    let text = std::fs::read_to_string(&out_path).unwrap();
    let rows: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("window_start"))
        .collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("0,300,"));
}

#[test]
fn reproduce_requires_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "reproduce",
        "linear-bench",
        "--out",
        dir.path().join("rep").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reproduce_is_byte_identical_under_fixed_seed() {
    let dir = tempfile::tempdir().unwrap();
    for sub in ["a", "b"] {
        let out = run(&[
            "reproduce",
            "linear-bench",
            "--seed",
            "17",
            "--permutations",
            "3",
            "--length",
            "80",
            "--lag-sets",
            "1",
            "--out",
            dir.path().join(sub).to_str().unwrap(),
        ]);
        assert_success(&out);
    }
    let mut names: Vec<String> = std::fs::read_dir(dir.path().join("a"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert!(names.contains(&"panel.csv".to_string()));
    assert!(names.contains(&"gc_lags_1.csv".to_string()));
    assert!(names.contains(&"te_lags_1.json".to_string()));
    for name in names {
        let a = std::fs::read(dir.path().join("a").join(&name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(&name)).unwrap();
        assert_eq!(a, b, "file {name} differs between identical runs");
    }
}

#[test]
fn reproduce_nonlinear_emits_values_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let rep = dir.path().join("rep");
    let out = run(&[
        "reproduce",
        "nonlinear-bench",
        "--seed",
        "23",
        "--realisations",
        "3",
        "--length",
        "150",
        "--out",
        rep.to_str().unwrap(),
    ]);
    assert_success(&out);
    let text = std::fs::read_to_string(rep.join("nonlinear_values.csv")).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    // Per realisation: 2 geweke kernels x 2 conditionings + hsncic x 2 + te x 2.
    assert_eq!(rows.len(), 3 * 8);
    for cell in [
        "geweke-gaussian,none",
        "geweke-gaussian,y",
        "geweke-linear,none",
        "geweke-linear,y",
        "hsncic,none",
        "hsncic,y",
        "te-lag1,none",
        "te-lag2,none",
    ] {
        assert_eq!(
            rows.iter().filter(|r| r.contains(cell)).count(),
            3,
            "cell {cell}"
        );
    }
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let input = gen_nonlinear(dir.path(), 150, 8);
    let config_path = dir.path().join("run.toml");
    std::fs::write(
        &config_path,
        format!(
            "input = \"{}\"\nmeasure = \"transfer-entropy\"\ntarget = \"z\"\ncause = [\"x\"]\nlags = [1]\npermutations = 10\nseed = 4\n",
            input.display()
        ),
    )
    .unwrap();
    let out_path = dir.path().join("from_config.json");
    // --permutations on the command line overrides the file's value.
    let out = run(&[
        "test",
        "--config",
        config_path.to_str().unwrap(),
        "--permutations",
        "7",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_success(&out);
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(doc["config"]["measure"], "transfer-entropy");
    assert_eq!(doc["config"]["permutations"], 7);
    assert_eq!(doc["surrogates"].as_array().unwrap().len(), 7);
}

#[test]
fn lag_zero_routes_geweke_to_instantaneous() {
    let dir = tempfile::tempdir().unwrap();
    let input = gen_linear(dir.path(), 200, 3);
    let out_path = dir.path().join("inst.json");
    let out = run(&[
        "test",
        "--input",
        input.to_str().unwrap(),
        "--measure",
        "geweke-linear",
        "--target",
        "ts1",
        "--cause",
        "ts2",
        "--lags",
        "0",
        "--permutations",
        "100",
        "--seed",
        "9",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_success(&out);
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(doc["config"]["instantaneous"], true);
    // Contemporaneous 0.7 correlation is detected.
    assert_eq!(doc["p_value"].as_f64().unwrap(), 0.0);
}

#[test]
fn hsncic_rejects_lag_zero() {
    let dir = tempfile::tempdir().unwrap();
    let input = gen_linear(dir.path(), 100, 3);
    let out = run(&[
        "test",
        "--input",
        input.to_str().unwrap(),
        "--measure",
        "hsncic",
        "--target",
        "ts1",
        "--cause",
        "ts2",
        "--lags",
        "0",
        "--permutations",
        "5",
        "--seed",
        "9",
        "--out",
        "/tmp/unused_hs.json",
    ]);
    assert_eq!(out.status.code(), Some(2));
}
