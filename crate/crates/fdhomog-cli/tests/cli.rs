//! End-to-end tests of the command-line interface.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fdhomog"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn fdhomog")
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fdhomog-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn simulate(dir: &Path, name: &str, model: u8, seed: u64, n: usize) -> PathBuf {
    let path = dir.join(name);
    let out = run(&[
        "simulate",
        "--model",
        &model.to_string(),
        "--n",
        &n.to_string(),
        "--grid",
        "20",
        "--seed",
        &seed.to_string(),
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

#[test]
fn simulate_writes_expected_csv_deterministically() {
    let dir = tmp_dir("simulate");
    let a = simulate(&dir, "a.csv", 0, 7, 50);
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().count(), 51); // header + 50 curves

    let b = simulate(&dir, "b.csv", 0, 7, 50);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn simulate_rejects_unknown_model() {
    let dir = tmp_dir("badmodel");
    let out = run(&[
        "simulate",
        "--model",
        "9",
        "--out",
        dir.join("x.csv").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown builtin model"));
}

#[test]
fn test_subcommand_runs_and_writes_json() {
    let dir = tmp_dir("test");
    let a = simulate(&dir, "a.csv", 0, 1, 30);
    let b = simulate(&dir, "b.csv", 1, 2, 30);
    let result = dir.join("result.json");
    let out = run(&[
        "test",
        "--file-a",
        a.to_str().unwrap(),
        "--file-b",
        b.to_str().unwrap(),
        "--method",
        "fm",
        "--boot",
        "200",
        "--seed",
        "3",
        "--out",
        result.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    // a strong mean shift: the verdict line reports a rejection
    assert!(text.contains("REJECT p="), "{text}");
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&result).unwrap()).unwrap();
    assert_eq!(json["method"], "fm");
    assert_eq!(json["n"], 30);
    assert_eq!(json["null_scheme"], "relabel");
}

#[test]
fn test_subcommand_verdict_does_not_affect_exit_code() {
    let dir = tmp_dir("verdict");
    let a = simulate(&dir, "a.csv", 0, 5, 25);
    let b = simulate(&dir, "b.csv", 0, 6, 25);
    let out = run(&[
        "test",
        "--file-a",
        a.to_str().unwrap(),
        "--file-b",
        b.to_str().unwrap(),
        "--method",
        "flores",
        "--boot",
        "100",
        "--seed",
        "4",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(
        text.contains("REJECT p=") || text.contains("FAIL-TO-REJECT p="),
        "{text}"
    );
}

#[test]
fn mismatched_grids_fail_with_diagnostic() {
    let dir = tmp_dir("grids");
    let a = simulate(&dir, "a.csv", 0, 1, 10);
    let b = dir.join("other.csv");
    std::fs::write(&b, "0.0,0.5,1.0\n1,2,3\n4,5,6\n").unwrap();
    let out = run(&[
        "test",
        "--file-a",
        a.to_str().unwrap(),
        "--file-b",
        b.to_str().unwrap(),
        "--method",
        "fm",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid"));
}

#[test]
fn ddplot_writes_svg_markers() {
    let dir = tmp_dir("ddplot");
    let a = simulate(&dir, "a.csv", 0, 1, 15);
    let b = simulate(&dir, "b.csv", 3, 2, 20);
    let svg_path = dir.join("plot.svg");
    let out = run(&[
        "ddplot",
        "--file-a",
        a.to_str().unwrap(),
        "--file-b",
        b.to_str().unwrap(),
        "--method",
        "fd2",
        "--out",
        svg_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let svg = std::fs::read_to_string(&svg_path).unwrap();
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches("<circle").count(), 35); // one marker per pooled curve
    assert!(svg.contains("class=\"diagonal\""));
    assert!(svg.contains("depth wrt a"));
}

#[test]
fn ddplot_rejects_empty_input() {
    let dir = tmp_dir("empty");
    let a = simulate(&dir, "a.csv", 0, 1, 10);
    let empty = dir.join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let out = run(&[
        "ddplot",
        "--file-a",
        a.to_str().unwrap(),
        "--file-b",
        empty.to_str().unwrap(),
        "--method",
        "fm",
        "--out",
        dir.join("plot.svg").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
}

#[test]
fn experiment_is_deterministic_and_writes_summary() {
    let dir = tmp_dir("experiment");
    let spec = dir.join("spec.json");
    std::fs::write(
        &spec,
        r#"{
            "pairs": [[0, 0], [0, 1]],
            "n_per_sample": 12,
            "grid_size": 10,
            "replications": 3,
            "tests": [
                {"method": "dd-fm", "num_boot": 60},
                {"method": "flores", "num_boot": 60}
            ],
            "master_seed": 99
        }"#,
    )
    .unwrap();
    let run_once = |prefix: &str| -> (Vec<u8>, serde_json::Value) {
        let out_prefix = dir.join(prefix);
        let out = run(&[
            "experiment",
            "--spec",
            spec.to_str().unwrap(),
            "--out",
            out_prefix.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let csv = std::fs::read(out_prefix.with_extension("csv")).unwrap();
        let summary: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(dir.join(format!("{prefix}-summary.json"))).unwrap(),
        )
        .unwrap();
        (csv, summary)
    };
    let (csv1, summary) = run_once("run1");
    let (csv2, _) = run_once("run2");
    assert_eq!(csv1, csv2, "byte-identical reruns");

    let text = String::from_utf8(csv1).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "pair,test,replications,rejections,rate,mean_p_adjusted"
    );
    assert_eq!(text.lines().count(), 5); // header + 2 pairs x 2 tests
    let tests = summary["tests"].as_array().unwrap();
    assert_eq!(tests.len(), 2);
    assert!(tests[0]["average_size"].is_number());
    assert!(tests[0]["average_power"].is_number());

    // --format json writes the table as JSON instead
    let json_prefix = dir.join("run3");
    let out = run(&[
        "experiment",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        json_prefix.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let table: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(json_prefix.with_extension("json")).unwrap(),
    )
    .unwrap();
    assert_eq!(table["rows"].as_array().unwrap().len(), 4);
}

#[test]
fn experiment_rejects_invalid_spec_with_field_name() {
    let dir = tmp_dir("badspec");
    let spec = dir.join("spec.json");
    std::fs::write(
        &spec,
        r#"{
            "pairs": [[0, 1]],
            "replications": 0,
            "tests": [{"method": "dd-fm"}],
            "master_seed": 1
        }"#,
    )
    .unwrap();
    let out = run(&[
        "experiment",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        dir.join("out").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("replications"));
}

#[test]
fn thread_cap_env_var_keeps_results_identical() {
    let dir = tmp_dir("threads");
    let a = simulate(&dir, "a.csv", 0, 11, 20);
    let b = simulate(&dir, "b.csv", 5, 12, 20);
    let run_with_threads = |threads: &str, out_name: &str| -> serde_json::Value {
        let result = dir.join(out_name);
        let out = bin()
            .env("FDHOMOG_THREADS", threads)
            .args([
                "test",
                "--file-a",
                a.to_str().unwrap(),
                "--file-b",
                b.to_str().unwrap(),
                "--method",
                "fd2",
                "--boot",
                "100",
                "--seed",
                "13",
                "--out",
                result.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        serde_json::from_str(&std::fs::read_to_string(&result).unwrap()).unwrap()
    };
    let single = run_with_threads("1", "single.json");
    let multi = run_with_threads("2", "multi.json");
    assert_eq!(single, multi);
}
