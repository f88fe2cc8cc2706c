//! End-to-end tests of the command-line binary against the shipped registry
//! files: output text, JSON shape, and exit codes.

use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_motivic"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_on(file: &str, args: &[&str]) -> Output {
    let path = fixture(file);
    let mut full = vec!["--universe", path.to_str().unwrap()];
    full.extend_from_slice(args);
    run(&full)
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf8 stderr")
}

#[test]
fn identity_word_has_zero_invariant() {
    let out = run_on("elliptic.json", &["c-eval", "identity"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert_eq!(stdout(&out).trim(), "0");
}

#[test]
fn link_word_invariant_prints_both_flavors() {
    let out = run_on("elliptic.json", &["c-eval", "psi"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).trim(), "[C*P1] - [J2(C)*P1]");
    let out = run_on("elliptic.json", &["tilde-c-eval", "psi"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        stdout(&out).trim(),
        "-[C] + [C*P1] + [J2(C)] - [J2(C)*P1]"
    );
}

#[test]
fn link_check_reports_the_certification_rule() {
    let out = run_on("elliptic.json", &["link", "check", "elliptic"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("Yes(Rule C)"), "got: {text}");
    assert!(text.contains("[C*P1] - [J2(C)*P1]"), "got: {text}");
}

#[test]
fn point_counts_match_the_closed_forms() {
    let out = run_on("counting.json", &["count", "Q3split", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).trim(), "15");
    let out = run_on("counting.json", &["count", "BlP2m", "3"]);
    assert_eq!(stdout(&out).trim(), "16");
}

#[test]
fn family_coordinates_print_as_matrix_rows() {
    let out = run_on(
        "family3.json",
        &["cremona", "eval", "surface-pairs", "w1", "w2", "w3"],
    );
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).trim(), "1 0 0\n0 1 0\n0 0 1");
    let out = run_on("family3.json", &["cremona", "eval", "surface-pairs", "mixed"]);
    assert_eq!(stdout(&out).trim(), "1 -1 0");
}

#[test]
fn fragment_report_and_l_equivalence() {
    let out = run_on("elliptic.json", &["k0", "report", "level3"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).trim(), "generators 18, relations 11, shape Z^7");
    let out = run_on("elliptic.json", &["l-equiv", "C", "J2(C)", "1", "level3"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).trim(), "true");
    // The same element is not yet a relation consequence one level down:
    // the blow-up records live in dimension three.
    let out = run_on("elliptic.json", &["l-equiv", "C", "J2(C)", "1", "level2"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout(&out).trim(), "false");
}

#[test]
fn verify_all_emits_valid_json() {
    let out = run_on("elliptic.json", &["--json", "verify", "all"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).expect("valid json");
    assert_eq!(v["universe"], "elliptic");
    assert_eq!(v["passed"], true);
    assert!(v["checks"].as_array().map(|a| !a.is_empty()).unwrap_or(false));
}

#[test]
fn unknown_names_exit_with_usage_code() {
    let out = run_on("elliptic.json", &["c-eval", "no-such-word"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("no-such-word"));
    let out = run_on("elliptic.json", &["link", "check", "no-such-link"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run_on("counting.json", &["count", "no-such-model", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn contradictory_declarations_fail_to_load() {
    let out = run_on("contradiction.json", &["verify", "all"]);
    assert_eq!(out.status.code(), Some(2));
    let text = stderr(&out);
    assert!(text.contains("certified distinct"), "got: {text}");
}

#[test]
fn empty_registry_verifies_vacuously() {
    let out = run_on("empty.json", &["verify", "all"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("pass: 0 checks"));
}

#[test]
fn budget_flag_limits_enumeration() {
    let out = run_on("counting.json", &["--budget", "3", "count", "Q3split", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("budget"), "got: {}", stderr(&out));
}
