//! End-to-end runs of the `hocu` binary: output formats and exit codes.
//! 0 = expectations met or solutions printed, 1 = expectation mismatch,
//! 2 = parse/type error, 3 = bound reached without meeting expectations.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("..").join("..").join("corpus")
}

fn hocu(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hocu")).args(args).output().expect("binary runs")
}

fn write_temp(name: &str, text: &str) -> PathBuf {
    let path = std::env::temp_dir().join(format!("hocu-cli-test-{}-{name}", std::process::id()));
    std::fs::write(&path, text).unwrap();
    path
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn golden_run_meets_expectations() {
    let path = corpus_dir().join("s31-ellipsis-por.hocu");
    let out = hocu(&[path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("expectations met"));
}

#[test]
fn plain_run_prints_solutions() {
    let text = "\
colours pe, pf;
types e, t;
const like : e -> e -> t;
const dan : e;
const golf : e;
var R : e -> t @ ~pe;
eq like(dan_pe, golf) = R(dan_pe);
";
    let path = write_temp("plain.hocu", text);
    let out = hocu(&[path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("R_~pe = \\z. like(z, golf)"), "{text}");
}

#[test]
fn clash_without_expectations_reports_exhaustion() {
    let text = "\
colours a, b;
types e;
const j : e;
var x : e @ a;
eq j_a = j_b;
";
    let path = write_temp("clash.hocu", text);
    let out = hocu(&[path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("no solutions (search space exhausted)"));
}

#[test]
fn starved_search_reports_bound() {
    let path = corpus_dir().join("s31-ellipsis-por.hocu");
    let out = hocu(&[path.to_str().unwrap(), "--max-bindings", "0"]);
    // the expect block cannot be met under the bound
    assert_eq!(out.status.code(), Some(3), "{}", stdout(&out));

    let text = "\
types e;
const a : e;
var x : e -> e;
eq x(a) = a;
";
    let plain = write_temp("starved.hocu", text);
    let out = hocu(&[plain.to_str().unwrap(), "--max-bindings", "0"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("no solutions (bound reached)"));
}

#[test]
fn parse_error_exits_2() {
    let path = write_temp("bad.hocu", "types e;\nconst f : ;\n");
    let out = hocu(&[path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!stderr(&out).is_empty());
}

#[test]
fn expectation_mismatch_exits_1() {
    let text = "\
types e;
const a : e;
var x : e -> e;
eq x(a) = a;
expect { x = \\z. a; }
";
    let path = write_temp("mismatch.hocu", text);
    let out = hocu(&[path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("unexpected"));
}

#[test]
fn erase_flag_solves_the_erased_problem() {
    // the coloured file has a unique solution; erased it has two, so the
    // expectation comparison fails
    let path = corpus_dir().join("s41-focus-fsv.hocu");
    let out = hocu(&[path.to_str().unwrap(), "--erase"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("unexpected"));
}

#[test]
fn trace_goes_to_stderr() {
    let path = corpus_dir().join("s5-crossover-10.hocu");
    let out = hocu(&[path.to_str().unwrap(), "--trace", "--strategy", "dfs"]);
    assert_eq!(out.status.code(), Some(0));
    let err = stderr(&out);
    assert!(err.contains("RULE decompose-abs ON 0"), "{err}");
    assert!(err.contains("BINDING"));
}

#[test]
fn directory_argument_runs_the_corpus() {
    let out = hocu(&[corpus_dir().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("PASS s31-ellipsis-por"));
    assert!(text.contains("0 failed"));
}

#[test]
fn runs_are_byte_identical() {
    let path = corpus_dir().join("s5-crossover-10.hocu");
    let a = hocu(&[path.to_str().unwrap(), "--trace"]);
    let b = hocu(&[path.to_str().unwrap(), "--trace"]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stderr, b.stderr);
}

#[test]
fn unknown_option_is_an_error() {
    let out = hocu(&["--frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}
