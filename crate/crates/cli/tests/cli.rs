mod common;

use std::io::Write as _;
use std::process::{Command, Output};

use common::corpus_dir;

fn minicheck(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_minicheck"))
        .current_dir(corpus_dir())
        .args(args)
        .output()
        .expect("spawn minicheck")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn temp(contents: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(contents.as_bytes()).unwrap();
    f
}

#[test]
fn exit_codes_follow_the_worst_live_verdict() {
    assert_eq!(minicheck(&["check", "r22_5.c"]).status.code(), Some(1));
    assert_eq!(minicheck(&["check", "transmit_octet.c"]).status.code(), Some(0));
    let o = minicheck(&["check", "--enable", "effectless", "misc.c"]);
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
}

#[test]
fn text_output_for_the_file_deref_listing() {
    let o = minicheck(&["check", "r22_5.c"]);
    assert_eq!(
        stdout(&o),
        "r22_5.c:5:14: [R22.5][definite] pointer to FILE dereferenced with '*' (check: file-deref-r22-5, origin: direct)\n"
    );
}

#[test]
fn usage_and_input_errors_exit_three() {
    for args in [
        &["check", "r22_5.c", "--enable", "nope"][..],
        &["check", "r22_5.c", "--enable", "effectless", "--disable", "effectless"],
        &["check", "missing.c"],
        &["check"],
        &["check", "--profile", "lenient", "r22_5.c"],
        &["frobnicate"],
    ] {
        let o = minicheck(args);
        assert_eq!(o.status.code(), Some(3), "{args:?}");
        assert!(!o.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn ledger_suppresses_without_dropping() {
    let ledger = temp("r22_5.c:5:file-deref-r22-5: stream never opened in this build\n");
    let o = minicheck(&["check", "r22_5.c", "--ledger", ledger.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("suppressed_by: ledger:1"), "{}", stdout(&o));
}

#[test]
fn malformed_side_inputs_are_errors() {
    let bad = temp("Z classify.c 3\n");
    let o = minicheck(&["check", "classify.c", "--coverage", bad.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn coverage_evidence_in_ndjson() {
    let o = minicheck(&["check", "classify.c", "--coverage", "classify.cov", "--format", "ndjson"]);
    let lines: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let ev: Vec<(&str, &str)> = lines
        .iter()
        .filter(|v| v["status"].is_string())
        .map(|v| (v["evidence"].as_str().unwrap(), v["status"].as_str().unwrap()))
        .collect();
    assert_eq!(ev, [("R2.1", "pass"), ("R14.3", "pass")]);
}

#[test]
fn defines_reach_the_preprocessor() {
    let src = temp("int f(void) {\n#ifdef BAD\n  FILE *p = 0;\n  FILE q = *p;\n#endif\n  return 0;\n}\n");
    let path = src.path().to_str().unwrap();
    assert_eq!(minicheck(&["check", "--enable", "file-deref-r22-5", path]).status.code(), Some(0));
    assert_eq!(minicheck(&["check", "--enable", "file-deref-r22-5", "-D", "BAD", path]).status.code(), Some(1));
}

#[test]
fn run_prints_a_trace() {
    let o = minicheck(&["run", "divide.c", "--entry", "mean", "--args", "7,-2"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.lines().any(|l| l.starts_with("EXEC ")), "{out}");
    assert_eq!(out.lines().last(), Some("OUTCOME terminated -3"));
}

#[test]
fn run_reports_fuel_exhaustion_and_bad_entries() {
    let src = temp("int spin(int a) {\n  while (1) { a++; }\n  return a;\n}\n");
    let o = minicheck(&["run", src.path().to_str().unwrap(), "--entry", "spin", "--args", "0", "--fuel", "50"]);
    assert_eq!(stdout(&o).lines().last(), Some("OUTCOME fuel-exhausted"));
    assert_eq!(minicheck(&["run", "divide.c"]).status.code(), Some(3));
}

#[test]
fn dump_cfg_lists_every_function() {
    let out = stdout(&minicheck(&["check", "divide.c", "--dump-cfg"]));
    assert!(out.contains("function intdiv (divide.c)"), "{out}");
    assert!(out.contains("function mean (divide.c)"), "{out}");
}
