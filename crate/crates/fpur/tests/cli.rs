//! CLI behavior: exit codes per error class, plot-data output, stdin-free
//! operation on files.

use std::path::Path;
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .to_str()
        .unwrap()
        .to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fpur"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

#[test]
fn parse_error_is_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    let out = run(&["analyze", bad.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);

    let missing = dir.path().join("nope.json");
    let out = run(&["analyze", missing.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);

    let out = run(&["et", &fixture("geometric.json"), "--policy", "bogus:3"]);
    assert_eq!(exit_code(&out), 2);

    let out = run(&["perturb", &fixture("geometric.json"), "--gap", "oops"]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn infinite_mean_requirement_is_exit_3() {
    let out = run(&["optimize", &fixture("zeta15.json")]);
    assert_eq!(exit_code(&out), 3);

    let out = run(&["perturb", &fixture("zeta15.json"), "--delay", "1"]);
    assert_eq!(exit_code(&out), 3);
}

#[test]
fn preemptive_policy_is_exit_4() {
    // restarting a deterministic time-3 process at time 2 never completes
    let out = run(&["et", &fixture("deterministic3.json"), "--policy", "sharp:2"]);
    assert_eq!(exit_code(&out), 4);
}

#[test]
fn not_a_distribution_is_exit_5() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad_dist.json");
    std::fs::write(
        &bad,
        r#"{"family":"explicit","offset":0,"probs":[0.5,0.1]}"#,
    )
    .unwrap();
    let out = run(&["analyze", bad.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 5);

    // U(0) = (1 - (-1))/(0.5 + 1) exceeds 1: unrealizable at this mean
    let seq = dir.path().join("seq.txt");
    std::fs::write(&seq, "-1\n0\n0\n").unwrap();
    let out = run(&["reconstruct", seq.to_str().unwrap(), "--mean", "0.5"]);
    assert_eq!(exit_code(&out), 5);
}

#[test]
fn trivially_beneficial_reports_with_exit_0() {
    let out = run(&["analyze", &fixture("zeta15.json")]);
    assert_eq!(exit_code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("verdict = trivially_beneficial"), "{text}");
}

#[test]
fn seq_out_writes_two_column_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("seq.dat");
    let out = run(&[
        "analyze",
        &fixture("two_point.json"),
        "--seq-out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0);
    let data = std::fs::read_to_string(&path).unwrap();
    let rows: Vec<&str> = data.lines().collect();
    assert_eq!(rows[0], "0 1");
    assert_eq!(rows[1], "1 -0.25");
    assert_eq!(rows.last().unwrap(), &"6 0");
}

#[test]
fn reconstruct_accepts_json_array_input() {
    let dir = tempfile::tempdir().unwrap();
    let seq = dir.path().join("seq.json");
    std::fs::write(&seq, "[1, 0, 0, 0, 0, 0, 0, 0]").unwrap();
    let out = run(&["reconstruct", seq.to_str().unwrap(), "--mean", "1"]);
    assert_eq!(exit_code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains(r#""family":"explicit","offset":1"#), "{text}");
}

#[test]
fn help_documents_exit_codes() {
    let out = run(&["--help"]);
    assert_eq!(exit_code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    for needle in ["Exit codes", "2  parse", "3  ", "4  ", "5  "] {
        assert!(text.contains(needle), "--help missing '{needle}':\n{text}");
    }
}
