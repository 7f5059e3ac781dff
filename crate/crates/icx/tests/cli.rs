//! End-to-end tests of the `icx` binary: exit codes, stream separation,
//! byte determinism, and the frozen trace format.

use std::io::Write as _;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use indexcode::fixtures::{directed_cycle, fractional_split, pentagon, xor_merge_pair};
use indexcode::instance::{render, Instance};

fn icx() -> Command {
    Command::new(env!("CARGO_BIN_EXE_icx"))
}

fn write_instance(dir: &Path, name: &str, inst: &Instance) -> String {
    let path = dir.join(name);
    std::fs::write(&path, render(inst)).expect("write fixture file");
    path.to_str().expect("UTF-8 path").to_string()
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("stdout is UTF-8")
}

fn stderr(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).expect("stderr is UTF-8")
}

#[test]
fn analyze_prints_sizes_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_instance(dir.path(), "pentagon.txt", &pentagon());
    let output = icx().args(["analyze", &path]).output().unwrap();
    assert_eq!(output.status.code(), Some(0));
    assert_eq!(
        stdout(&output),
        "m=5 s=5 unicast=true acyclic=false directed_cycle=false near_complete=false\n"
    );
}

#[test]
fn unreadable_or_malformed_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "decoders 3\nbit x need 1 2\n").unwrap();

    let output = icx().args(["analyze", bad.to_str().unwrap()]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr(&output).contains("parse error"));
    assert!(stdout(&output).is_empty());

    let missing = dir.path().join("nope.txt");
    let output = icx().args(["check", missing.to_str().unwrap()]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr(&output).contains("cannot read"));
}

#[test]
fn check_output_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_instance(dir.path(), "wide.txt", &fractional_split());
    let run = || icx().args(["check", "--trace", &path]).output().unwrap();
    let (a, b) = (run(), run());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stderr, b.stderr);
    assert!(!a.stdout.is_empty());
}

#[test]
fn strict_mode_turns_budget_skips_into_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_instance(dir.path(), "wide.txt", &fractional_split());

    // 13 bits exceed the default 9-bit search budget: the report still
    // prints in full, but --strict flips the exit code.
    let relaxed = icx().args(["check", &path]).output().unwrap();
    assert_eq!(relaxed.status.code(), Some(0));
    assert!(stdout(&relaxed).contains("exact: skipped"));

    let strict = icx().args(["check", "--strict", &path]).output().unwrap();
    assert_eq!(strict.status.code(), Some(3));
    assert_eq!(relaxed.stdout, strict.stdout);

    // The standalone search command follows the same rule.
    let exact = icx().args(["exact", &path]).output().unwrap();
    assert_eq!(exact.status.code(), Some(0));
    assert!(stdout(&exact).starts_with("skipped:"));
    let exact_strict = icx().args(["exact", "--strict", &path]).output().unwrap();
    assert_eq!(exact_strict.status.code(), Some(3));

    // A raised budget lets it run: rate 10 < the integral heuristic's 11
    // would be wrong, but 13 bits only fit with a bigger cap. Don't wait
    // for the search here; just confirm the budget flag is honored on a
    // small instance instead.
    let small = write_instance(dir.path(), "small.txt", &directed_cycle(4));
    let output = icx()
        .args(["exact", "--max-oracle-bits", "3", &small])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    assert!(stdout(&output).starts_with("skipped:"));
}

#[test]
fn check_json_reports_the_merge_example() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_instance(dir.path(), "merge.txt", &xor_merge_pair());
    let output = icx().args(["check", "--json", &path]).output().unwrap();
    assert_eq!(output.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&output)).expect("valid JSON");
    assert_eq!(v["instance"]["m"], 4);
    assert_eq!(v["instance"]["s"], 6);
    assert_eq!(v["lower"]["value"], 5);
    assert_eq!(v["capm"]["rate"], 5);
    assert_eq!(v["capm"]["post_balance_rate"], 6);
    assert_eq!(v["scapm"]["rate"], "5");
    assert_eq!(v["scapm"]["numerator"], "5");
    assert_eq!(v["scapm"]["denominator"], "1");
    assert_eq!(v["exact"]["rate"], 5);
    assert_eq!(v["certified_optimal"], true);
    assert_eq!(v["certificate"], "bounds-met");
    assert!(v["capm"]["trace"].is_null(), "trace only appears on request");
}

#[test]
fn capm_trace_matches_the_frozen_event_format() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_instance(dir.path(), "merge.txt", &xor_merge_pair());
    let output = icx().args(["capm", "--trace", &path]).output().unwrap();
    assert_eq!(output.status.code(), Some(0));
    let expected = "\
trace:
placed bit=1 to={1,2}
placed bit=2 to={2,3}
placed bit=3 to={1,2,3}
placed bit=4 to={1,2,3}
placed bit=5 to={1,2,3,4}
placed bit=6 to={1,2,3,4}
promoted bit=1 from={1,2} to={1,2,3} low=2 high=1
promoted bit=2 from={2,3} to={1,2,3} low=2 high=3
promoted bit=4 from={1,2,3} to={1,2,3,4} low=2 high=1
promoted bit=3 from={1,2,3} to={1,2,3,4} low=2 high=3
promoted bit=1 from={1,2,3} to={1,2,3,4} low=2 high=1
promoted bit=2 from={1,2,3} to={1,2,3,4} low=2 high=1
xored msg={1,2,3,4} keep=4 drop=3
";
    assert!(
        stdout(&output).contains(expected),
        "got:\n{}",
        stdout(&output)
    );
}

#[test]
fn scapm_reports_the_fractional_pentagon_rate() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_instance(dir.path(), "pentagon.txt", &pentagon());
    let output = icx().args(["scapm", &path]).output().unwrap();
    assert_eq!(output.status.code(), Some(0));
    assert!(
        stdout(&output).starts_with("rate: 5/2 = 2.5 (t=2,"),
        "got:\n{}",
        stdout(&output)
    );
}

#[test]
fn bound_reads_stdin_when_the_path_is_a_dash() {
    let mut child = icx()
        .args(["bound", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .as_mut()
        .unwrap()
        .write_all(render(&directed_cycle(4)).as_bytes())
        .unwrap();
    let output = child.wait_with_output().unwrap();
    assert_eq!(output.status.code(), Some(0));
    let text = stdout(&output);
    assert!(text.starts_with("value: 3\n"), "got:\n{text}");
}

#[test]
fn suite_passes_through_the_binary() {
    let output = icx().args(["check", "--suite"]).output().unwrap();
    assert_eq!(output.status.code(), Some(0));
    let text = stdout(&output);
    assert!(text.contains("PASS pentagon"));
    assert!(text.ends_with("suite: 13 checks, 0 failed\n"));
}

#[test]
fn generate_writes_files_and_stdout_identically() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("cycle.txt");
    let to_file = icx()
        .args(["generate", "cycle", "--m", "6", "--out", file.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(to_file.status.code(), Some(0));
    assert!(stdout(&to_file).is_empty());

    let to_stdout = icx().args(["generate", "cycle", "--m", "6"]).output().unwrap();
    assert_eq!(to_stdout.status.code(), Some(0));
    assert_eq!(
        std::fs::read_to_string(&file).unwrap(),
        stdout(&to_stdout)
    );
    assert_eq!(stdout(&to_stdout), render(&directed_cycle(6)));
}
