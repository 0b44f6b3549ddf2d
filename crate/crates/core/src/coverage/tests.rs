use proptest::prelude::*;

use super::*;
use crate::flow::analyze;
use crate::sema::compile_str;

const UNIT: &str = "int g;
int classify(int v) {
  int r = 0;
  if (v > 0) {
    r = 1;
  } else {
    r = 2;
  }
  return r;
}
int main(void) {
  g = classify(1);
  g = g + classify(-1);
  return 0;
}
";

const STMT_LINES: [u32; 8] = [3, 4, 5, 7, 9, 12, 13, 14];

fn full_coverage() -> String {
    let mut s = String::from("P unit tests\n");
    for l in STMT_LINES {
        s.push_str(&format!("S input.c {l} 1\n"));
    }
    s.push_str("B input.c 4 0 1\nB input.c 4 1 1\n");
    s
}

fn merge(src: &str, cov: &str, annotations: &[&str]) -> Result<EvidenceReport, SoundnessError> {
    let u = compile_str(src).unwrap_or_else(|e| panic!("{}", e.message()));
    let flow = analyze(&u).unwrap();
    let map = parse_coverage(cov).unwrap();
    let ann: BTreeSet<String> = annotations.iter().map(|s| s.to_string()).collect();
    merge_evidence(&u, &flow, &map, &ann)
}

fn diags(src: &str, cov: Option<&str>) -> Vec<Diagnostic> {
    let u = compile_str(src).unwrap();
    let flow = analyze(&u).unwrap();
    let map = parse_coverage(cov.unwrap_or("")).unwrap();
    let report = merge_evidence(&u, &flow, &map, &BTreeSet::new()).unwrap();
    evidence_diagnostics(&u, &report, cov.is_some(), &|_| true)
}

fn loc(line: u32) -> Location {
    Location { file: "input.c".into(), line }
}

#[test]
fn parses_records() {
    let m = parse_coverage("# header\nS main.c 12 3\n\nB main.c 4 1 7\nP nightly system tests\n").unwrap();
    assert_eq!(m.stmt_counts[&("main.c".to_string(), 12)], 3);
    assert_eq!(m.branch_counts[&("main.c".to_string(), 4, 1)], 7);
    assert_eq!(m.provenance.as_deref(), Some("nightly system tests"));
}

#[test]
fn duplicate_records_sum() {
    let m = parse_coverage("S main.c 12 1\nS main.c 12 2\n").unwrap();
    assert_eq!(m.stmt_counts[&("main.c".to_string(), 12)], 3);
}

#[test]
fn malformed_records_report_their_line() {
    let cases = [
        ("S main.c 1 1\nS main.c twelve 3\n", 2),
        ("S main.c 12 -1\n", 1),
        ("\n\nX main.c 1 1\n", 3),
        ("S main.c 12\n", 1),
        ("B main.c 12 0 1 9\n", 1),
        ("S main.c 0 1\n", 1),
    ];
    for (text, line) in cases {
        let e = parse_coverage(text).unwrap_err();
        assert_eq!(e.line, line, "{text:?}: {e}");
    }
    assert!(parse_coverage("S main.c 12 -1\n").unwrap_err().message.contains("negative"));
}

#[test]
fn full_coverage_passes_both_rules() {
    let r = merge(UNIT, &full_coverage(), &[]).unwrap();
    assert_eq!(r.r2_1, RuleEvidence::Pass);
    assert_eq!(r.r14_3, RuleEvidence::Pass);
    assert!(r.warnings.is_empty(), "{:?}", r.warnings);
    assert_eq!(r.provenance.as_deref(), Some("unit tests"));
    let lines: BTreeSet<u32> = r.statements.iter().map(|s| s.line).collect();
    assert_eq!(lines, STMT_LINES.into_iter().collect());
}

#[test]
fn each_missing_statement_record_opens_r2_1_at_that_line() {
    for missing in STMT_LINES {
        let cov: String = full_coverage()
            .lines()
            .filter(|l| *l != format!("S input.c {missing} 1"))
            .map(|l| format!("{l}\n"))
            .collect();
        let r = merge(UNIT, &cov, &[]).unwrap();
        assert_eq!(r.r2_1, RuleEvidence::Open(vec![loc(missing)]), "line {missing}");
    }
}

#[test]
fn one_branch_side_never_taken() {
    let cov = full_coverage().replace("B input.c 4 1 1\n", "");
    let r = merge(UNIT, &cov, &[]).unwrap();
    assert_eq!(r.r14_3, RuleEvidence::Open(vec![loc(4)]));
    assert_eq!(r.branches[0].status, BranchStatus::OneSideNever);
    assert_eq!(r.branches[0].counts, vec![1, 0]);
    let d = diags(UNIT, Some(&cov));
    assert_eq!(d.len(), 1);
    assert_eq!((d[0].rule_id.as_str(), d[0].verdict), ("R14.3", Verdict::possible(Relation::OverApprox)));
    assert!(d[0].message.contains("branch-false"));
}

#[test]
fn empty_coverage_never_passes() {
    let r = merge(UNIT, "", &[]).unwrap();
    assert!(!r.r2_1.is_pass());
    assert!(r.statements.iter().all(|s| s.status == StmtStatus::UncoveredUnknown));
}

const IF_ZERO: &str = "int g;
int main(void) {
  if (0) {
    g = 1;
  }
  return 0;
}
";

#[test]
fn constant_condition_is_definite_r14_3_under_any_coverage() {
    for cov in ["", "S input.c 3 1\nS input.c 6 1\nB input.c 3 0 1\nB input.c 3 1 1\n"] {
        let r = merge(IF_ZERO, cov, &[]).unwrap();
        assert_eq!(r.branches.len(), 1);
        assert_eq!(r.branches[0].status, BranchStatus::StaticallyConstant);
        assert_eq!(r.r14_3, RuleEvidence::Open(vec![loc(3)]));
        assert_eq!(r.r2_1, if cov.is_empty() {
            RuleEvidence::Open(vec![loc(3), loc(4), loc(6)])
        } else {
            RuleEvidence::Open(vec![loc(4)])
        });
        let d = diags(IF_ZERO, Some(cov));
        let r14: Vec<_> = d.iter().filter(|d| d.rule_id == "R14.3").collect();
        assert_eq!(r14.len(), 1);
        assert_eq!(r14[0].verdict, Verdict::definite(Relation::UnderApprox));
        assert_eq!(r14[0].span.line, 3);
    }
}

#[test]
fn static_findings_without_coverage() {
    let d = diags(IF_ZERO, None);
    let got: Vec<(&str, u32)> = d.iter().map(|d| (d.rule_id.as_str(), d.span.line)).collect();
    assert_eq!(got, vec![("R2.1", 4), ("R14.3", 3)]);
}

#[test]
fn covered_unreachable_line_is_a_soundness_error() {
    let e = merge(IF_ZERO, "S input.c 4 1\n", &[]).unwrap_err();
    assert_eq!((e.function.as_str(), e.line), ("main", 4));
}

#[test]
fn shared_line_count_goes_to_reachable_statements() {
    let src = "int g;\nint main(void) {\n  if (0) { g = 1; }\n  return 0;\n}\n";
    let r = merge(src, "S input.c 3 1\nS input.c 4 1\n", &[]).unwrap();
    let on3: Vec<StmtStatus> = r.statements.iter().filter(|s| s.line == 3).map(|s| s.status).collect();
    assert_eq!(on3, vec![StmtStatus::Covered, StmtStatus::UncoveredStaticallyUnreachable]);
}

const ISR: &str = "int ticks;
void timer_isr(void) {
  ticks = ticks + 1;
}
int main(void) {
  return ticks;
}
";

#[test]
fn annotations_make_entry_points() {
    let r = merge(ISR, "S input.c 3 1\nS input.c 6 1\n", &[]).unwrap();
    let isr = r.statements.iter().find(|s| s.function == "timer_isr").unwrap();
    assert_eq!(isr.unreachable, Some(Unreachable::Function));
    assert_eq!(isr.status, StmtStatus::Covered);
    assert!(r.warnings.iter().any(|w| w.contains("timer_isr")));
    assert!(r.r2_1.is_pass());

    let r = merge(ISR, "S input.c 6 1\n", &[]).unwrap();
    assert_eq!(r.r2_1, RuleEvidence::Open(vec![loc(3)]));

    let r = merge(ISR, "S input.c 3 1\nS input.c 6 1\n", &["timer_isr"]).unwrap();
    assert!(r.warnings.is_empty(), "{:?}", r.warnings);
    assert!(r.entry_points.contains(&"timer_isr".to_string()));
    assert!(r.statements.iter().all(|s| s.unreachable.is_none()));
}

#[test]
fn unknown_annotation_and_stray_records_warn() {
    let r = merge(ISR, "S input.c 1 1\nB input.c 6 0 1\n", &["nmi_handler"]).unwrap();
    assert_eq!(r.warnings.len(), 3, "{:?}", r.warnings);
}

#[test]
fn library_unit_roots_every_external_function() {
    let r = merge("static int helper(void) { return 1; }\nint api(void) { return 2; }\n", "", &[]).unwrap();
    let helper = r.statements.iter().find(|s| s.function == "helper").unwrap();
    let api = r.statements.iter().find(|s| s.function == "api").unwrap();
    assert_eq!(helper.unreachable, Some(Unreachable::Function));
    assert_eq!(api.unreachable, None);
}

#[test]
fn permitted_invariant_loops_are_not_branches() {
    let src = "void work(void);
void f(void) {
  while (1) {
    work();
  }
}
void g(void) {
  do {
    work();
  } while (0);
}
";
    let r = merge(src, "", &[]).unwrap();
    assert!(r.branches.is_empty());
}

#[test]
fn switch_edges_are_indexed_in_case_order() {
    let src = "int g;
void f(int v) {
  switch (v) {
  case 1: g = 1; break;
  case 2: g = 2; break;
  }
}
";
    let r = merge(src, "B input.c 3 0 4\nB input.c 3 2 1\n", &[]).unwrap();
    let b = &r.branches[0];
    assert_eq!(b.edges, vec!["switch-case 1", "switch-case 2", "switch-default"]);
    assert_eq!(b.counts, vec![4, 0, 1]);
    assert_eq!(b.status, BranchStatus::OneSideNever);
}

#[test]
fn declarations_without_initializers_are_not_statements() {
    let r = merge("int main(void) {\n  int x;\n  x = 1;\n  return x;\n}\n", "", &[]).unwrap();
    let lines: Vec<u32> = r.statements.iter().map(|s| s.line).collect();
    assert_eq!(lines, vec![3, 4]);
}

proptest! {
    #[test]
    fn adding_records_never_uncovers(
        base in proptest::collection::vec((0usize..8, 0u64..3), 0..12),
        extra in proptest::collection::vec((0usize..8, 0u64..3), 0..12),
    ) {
        let text = |recs: &[(usize, u64)]| -> String {
            recs.iter().map(|(i, c)| format!("S input.c {} {}\n", STMT_LINES[*i], c)).collect()
        };
        let before = merge(UNIT, &text(&base), &[]).unwrap();
        let mut all = base.clone();
        all.extend(extra);
        let after = merge(UNIT, &text(&all), &[]).unwrap();
        for (b, a) in before.statements.iter().zip(&after.statements) {
            prop_assert_eq!(b.stmt, a.stmt);
            if b.status == StmtStatus::Covered {
                prop_assert_eq!(a.status, StmtStatus::Covered);
            }
        }
    }
}
