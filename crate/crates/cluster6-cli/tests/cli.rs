//! Behavioral tests for the command-line interface: output formats, exit
//! codes, and determinism.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cluster6"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn tmp(name: &str) -> PathBuf {
    let mut path = std::env::temp_dir();
    path.push(format!("cluster6-cli-test-{}-{name}", std::process::id()));
    path
}

#[test]
fn stabilizers_prints_all_64_subsets() {
    let out = run(&["stabilizers", "--graph", "lc6", "--frame", "tilde"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 64);
    assert!(lines.contains(&"I  I"));
    assert!(lines.contains(&"g3  -Z3Z6"));
    assert!(lines.contains(&"g5  -X2X5Z6"));
    assert!(lines.contains(&"g1*g6  X1X2X3X4Z5X6"));
}

#[test]
fn stabilizers_plain_frame_gives_graph_generators() {
    let out = run(&["stabilizers", "--graph", "lc6", "--frame", "plain"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("g1  X1Z2Z4"));
    assert!(text.contains("g4  Z1X4"));
    assert!(text.contains("g6  Z3Z5X6"));
}

#[test]
fn stabilizers_reads_edge_lists() {
    let path = tmp("edges.txt");
    std::fs::write(&path, "n=6\n1 2\n1 4\n2 5\n3 6\n5 6\n").unwrap();
    let out = run(&[
        "stabilizers",
        "--graph",
        "edge-list",
        path.to_str().unwrap(),
        "--frame",
        "plain",
    ]);
    let reference = run(&["stabilizers", "--graph", "lc6", "--frame", "plain"]);
    assert_eq!(stdout(&out), stdout(&reference));
    std::fs::remove_file(&path).ok();
}

#[test]
fn analyze_bundled_dataset_prints_the_headlines() {
    let out = run(&["analyze", "--data", "table1"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("fidelity    0.634998"));
    assert!(text.contains("witness     -0.269997"));
    assert!(text.contains("2.32500"));
    assert!(text.contains("2.88110"));
    assert!(text.contains("6.98740"));
    assert!(text.contains("7.018"), "missing dataset-rounding note");
}

#[test]
fn analyze_report_files_are_deterministic() {
    let a = tmp("report-a.json");
    let b = tmp("report-b.json");
    assert!(run(&["analyze", "--data", "table1", "--report", a.to_str().unwrap()])
        .status
        .success());
    assert!(run(&["analyze", "--data", "table1", "--report", b.to_str().unwrap()])
        .status
        .success());
    let ja = std::fs::read(&a).unwrap();
    let jb = std::fs::read(&b).unwrap();
    assert_eq!(ja, jb);
    let parsed: serde_json::Value = serde_json::from_slice(&ja).unwrap();
    assert_eq!(parsed["metadata"]["dataset"], "table1");
    assert!(parsed["expressions"].as_array().unwrap().len() == 3);
    std::fs::remove_file(&a).ok();
    std::fs::remove_file(&b).ok();
}

#[test]
fn simulate_exact_route_reports_the_ideal_values() {
    let out = run(&["simulate", "--state", "lc6-tilde"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("fidelity    1.00000"));
    assert!(text.contains("witness     -1.00000"));
    assert!(text.contains("16.0000"));
}

#[test]
fn simulate_writes_exact_tables() {
    let path = tmp("exact.csv");
    let out = run(&["simulate", "--state", "lc6-tilde", "--table", path.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("I,1,0,,,\n"));
    let mut rows = 0;
    for line in text.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        let value: f64 = cells[1].parse().unwrap();
        let sigma: f64 = cells[2].parse().unwrap();
        assert!((value - 1.0).abs() < 1e-12, "{line}");
        assert_eq!(sigma, 0.0, "{line}");
        rows += 1;
    }
    assert_eq!(rows, 64);
    assert!(text.contains("g1*g6,") && text.contains(",B,,\n"));
    assert!(text.contains("g1,") && text.contains(",beta,\n"));
    std::fs::remove_file(&path).ok();
}

#[test]
fn simulate_accepts_dephasing() {
    let out = run(&["simulate", "--state", "lc6-tilde", "--dephase", "1:0.1,4:0.25"]);
    assert!(out.status.success());
    // g4 = Z1Z4 is dephasing-proof, g1 = X1X2X4 is damped by (1-2q1)(1-2q4)
    let text = stdout(&out);
    assert!(text.contains("dephase1=0.1"));
}

#[test]
fn lhv_enumeration_outputs() {
    let out = run(&["lhv", "--expr", "B"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("lhv_bound = 4.00000"));
    assert!(text.contains("14 observables"));
    assert!(text.contains("16384 assignments"));

    let out = run(&["lhv", "--expr", "beta"]);
    assert!(stdout(&out).contains("lhv_bound = 2.00000"));
    let out = run(&["lhv", "--expr", "betaprime"]);
    assert!(stdout(&out).contains("lhv_bound = 2.00000"));
}

#[test]
fn report_diff_spots_changes() {
    let a = tmp("diff-a.json");
    let b = tmp("diff-b.json");
    run(&["analyze", "--data", "table1", "--report", a.to_str().unwrap()]);
    run(&["simulate", "--state", "lc6-tilde", "--report", b.to_str().unwrap()]);

    let same = run(&["report-diff", a.to_str().unwrap(), a.to_str().unwrap()]);
    assert!(same.status.success());
    assert!(stdout(&same).contains("reports identical"));

    let diff = run(&["report-diff", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert!(diff.status.success());
    let text = stdout(&diff);
    assert!(text.contains("fidelity.value: 0.634998 -> 1.00000"));
    assert!(text.contains("field(s) differ"));
    std::fs::remove_file(&a).ok();
    std::fs::remove_file(&b).ok();
}

#[test]
fn validation_errors_exit_1_naming_the_flag() {
    let cases: Vec<(&[&str], &str)> = vec![
        (&["analyze", "--data", "nope"], "--data"),
        (&["analyze"], "--input"),
        (&["simulate", "--state", "what"], "--state"),
        (&["simulate", "--state", "lc6-tilde", "--noise-white", "1.5"], "--noise-white"),
        (&["simulate", "--state", "lc6-tilde", "--dephase", "1=0.1"], "--dephase"),
        (&["simulate", "--state", "lc6-tilde", "--dephase", "1:0.7"], "--dephase"),
        (&["simulate", "--state", "lc6-tilde", "--shots", "0"], "--shots"),
        (&["lhv", "--expr", "chsh"], "--expr"),
        (&["stabilizers", "--graph", "k5"], "--graph"),
        (&["stabilizers", "--frame", "sideways"], "--frame"),
    ];
    for (args, flag) in cases {
        let out = run(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(stderr(&out).contains(flag), "{args:?}: {}", stderr(&out));
    }

    let out = run(&["analyze", "--definitely-not-a-flag"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn analysis_errors_exit_2() {
    let partial = tmp("partial.csv");
    std::fs::write(&partial, "stabilizer,value,sigma\ng1,0.5,0.01\n").unwrap();
    let out = run(&["analyze", "--input", partial.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("missing"));
    std::fs::remove_file(&partial).ok();

    let out = run(&["analyze", "--input", "/nonexistent-table.csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn help_and_version_exit_0() {
    assert!(run(&["--help"]).status.success());
    assert!(run(&["--version"]).status.success());
}
