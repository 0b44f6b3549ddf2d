use proptest::prelude::*;

use super::*;
use crate::flow::analyze;
use crate::sema::compile_str;

fn unit(src: &str) -> TypedUnit {
    compile_str(src).unwrap_or_else(|e| panic!("{}", e.message()))
}

fn run_main(src: &str, fuel: u64) -> ExecutionTrace {
    run(&unit(src), "main", &[], fuel).unwrap()
}

fn error_kind(t: &ExecutionTrace) -> Option<RuntimeErrorKind> {
    match &t.outcome {
        Outcome::RuntimeError(e) => Some(e.kind),
        _ => None,
    }
}

#[test]
fn infinite_loop_exhausts_fuel_on_its_condition() {
    let u = unit("int main(void) {\n  while (1);\n  return 0;\n}\n");
    let t = run(&u, "main", &[], 1000).unwrap();
    assert_eq!(t.outcome, Outcome::FuelExhausted);
    assert_eq!(t.executed.len(), 1000);
    let first = t.executed[0];
    assert!(t.executed.iter().all(|s| *s == first));
}

#[test]
fn runtime_errors_by_kind() {
    let cases = [
        ("int main(void) { return 10 / 0; }", RuntimeErrorKind::DivisionByZero),
        ("int main(void) { int x; return x; }", RuntimeErrorKind::UninitializedRead),
        ("int main(void) { int x = 2147483647; x = x + 1; return 0; }", RuntimeErrorKind::SignedOverflow),
        ("int main(void) { int *p = 0; return *p; }", RuntimeErrorKind::NullDeref),
        ("int main(void) { int a[3]; a[3] = 1; return 0; }", RuntimeErrorKind::OobAccess),
        ("int main(void) { int s = 40; return 1 << s; }", RuntimeErrorKind::InvalidShift),
        ("int main(void) { int *p = malloc(4); free(p); free(p); return 0; }", RuntimeErrorKind::BadFree),
        ("int main(void) { int *p = malloc(4); free(p); *p = 1; return 0; }", RuntimeErrorKind::UseAfterFree),
        ("int main(void) { double d = 1e20; int i = d; return i; }", RuntimeErrorKind::ConversionOverflow),
        ("int main(void) { return isdigit(300); }", RuntimeErrorKind::LibraryDomain),
        ("int main(void) { char *s = \"ab\"; s[0] = 'x'; return 0; }", RuntimeErrorKind::OobAccess),
        ("int main(void) { int m = -2147483647 - 1; return m / -1; }", RuntimeErrorKind::SignedOverflow),
    ];
    for (src, kind) in cases {
        assert_eq!(error_kind(&run_main(src, 1000)), Some(kind), "{src}");
    }
}

#[test]
fn unsigned_arithmetic_wraps() {
    let t = run_main("int main(void) { unsigned u = 0; u = u - 1; return u == 4294967295U; }", 100);
    assert_eq!(t.outcome, Outcome::Terminated { code: 1 });
    let t = run_main("int main(void) { unsigned char c = 255; c++; return c; }", 100);
    assert_eq!(t.outcome, Outcome::Terminated { code: 0 });
}

#[test]
fn computes_ordinary_programs() {
    let src = "struct P { int x; int y; };
static int sq(int v) { return v * v; }
int main(void) {
  struct P p = { 3, 4 };
  int a[4] = { 1, 2 };
  int s = 0;
  int i;
  for (i = 0; i < 4; i++) {
    s += a[i];
  }
  switch (s) {
  case 3: s = sq(p.x) + sq(p.y); break;
  default: s = -1;
  }
  return s;
}
";
    assert_eq!(run_main(src, 1000).outcome, Outcome::Terminated { code: 25 });
}

#[test]
fn goto_and_switch_fallthrough() {
    let src = "int main(void) {
  int n = 0;
again:
  n++;
  if (n < 3) goto again;
  switch (n) {
  case 3: n += 10;
  case 4: n += 100; break;
  case 5: n = 0;
  }
  return n;
}
";
    assert_eq!(run_main(src, 1000).outcome, Outcome::Terminated { code: 113 });
}

#[test]
fn library_strings_and_output() {
    let src = "int main(void) {
  char buf[16];
  strcpy(buf, \"hello\");
  strcat(buf, \"!\");
  printf(\"%s %d %03u|%-3c|\\n\", buf, -7, 5u, 'z');
  return (int)strlen(buf);
}
";
    let t = run_main(src, 1000);
    assert_eq!(t.outcome, Outcome::Terminated { code: 6 });
    assert_eq!(String::from_utf8(t.output).unwrap(), "hello! -7 005|z  |\n");
}

#[test]
fn strtol_reports_range_errors_through_errno() {
    let src = "int main(void) {
  char *end;
  long v;
  errno = 0;
  v = strtol(\"99999999999999999999\", &end, 10);
  return errno == ERANGE && v == LONG_MAX && *end == 0;
}
";
    assert_eq!(run_main(src, 100).outcome, Outcome::Terminated { code: 1 });
}

#[test]
fn stdin_is_empty_and_fopen_succeeds() {
    let src = "int main(void) {
  FILE *f = fopen(\"data.txt\", \"r\");
  int c = fgetc(f);
  int d = getchar();
  return c == EOF && d == EOF;
}
";
    let t = run_main(src, 100);
    assert_eq!(t.outcome, Outcome::Terminated { code: 1 });
    assert_eq!(t.open_resources.len(), 1);
    assert_eq!(t.open_resources[0].kind, "stream");
}

#[test]
fn leaked_heap_block_is_reported() {
    let t = run_main("int main(void) { char *p = malloc(8); p[0] = 1; return 0; }", 100);
    assert_eq!(t.open_resources.len(), 1);
    assert_eq!(t.open_resources[0].kind, "memory");
}

#[test]
fn exit_terminates_with_its_status() {
    let t = run_main("static void die(void) { exit(3); }\nint main(void) { die(); return 0; }", 100);
    assert_eq!(t.outcome, Outcome::Terminated { code: 3 });
}

#[test]
fn unknown_external_call_is_inconclusive() {
    let t = run_main("int sensor(void);\nint main(void) { return sensor(); }", 100);
    assert!(matches!(&t.outcome, Outcome::Inconclusive { function, .. } if function == "sensor"));
}

#[test]
fn unbounded_recursion_stops_at_the_depth_limit() {
    let t = run_main("static int f(int n) { return f(n + 1); }\nint main(void) { return f(0); }", 1_000_000);
    assert_eq!(t.outcome, Outcome::CallDepthExceeded);
}

#[test]
fn missing_return_value_used_is_uninitialized() {
    let src = "static int f(int v) { if (v) return 1; }\nint main(void) { f(0); return f(0); }";
    assert_eq!(error_kind(&run_main(src, 100)), Some(RuntimeErrorKind::UninitializedRead));
}

#[test]
fn entry_is_validated() {
    let u = unit("int f(int a, int b) { return a + b; }\nint g(char *p) { return 0; }");
    assert_eq!(run(&u, "nope", &[], 10).unwrap_err(), RunError::UnknownEntry("nope".into()));
    assert!(matches!(run(&u, "f", &[1], 10), Err(RunError::Arity { expected: 2, got: 1, .. })));
    assert!(matches!(run(&u, "g", &[1], 10), Err(RunError::NonIntegerParam { index: 0, .. })));
    assert_eq!(run(&u, "f", &[1, 2], 0).unwrap_err(), RunError::NoFuel);
    assert_eq!(run(&u, "f", &[1, 2], 10).unwrap().outcome, Outcome::Terminated { code: 3 });
}

#[test]
fn sweep_unions_executed_statements() {
    let u = unit("int g;\nint f(int a) {\n  if (a > 0) {\n    g = 1;\n  }\n  if (a * a < 0) {\n    g = 2;\n  }\n  return 0;\n}\n");
    let facts = sweep(&u, "f", DEFAULT_GRID, 1000).unwrap();
    assert_eq!(facts.runs.len(), 5);
    let lines: BTreeSet<u32> = facts
        .ever_executed
        .iter()
        .map(|s| flow_line(&u, *s))
        .collect();
    assert!(lines.contains(&4));
    assert!(!lines.contains(&7));
}

fn flow_line(u: &TypedUnit, id: StmtId) -> u32 {
    let mut line = 0;
    for f in u.ast.functions() {
        f.body.walk(&mut |s| {
            if s.id == id {
                line = s.span.line;
            }
        });
    }
    line
}

#[test]
fn store_read_back_is_witnessed() {
    let src = "int f(int a) {\n  int x = 1;\n  int y = 2;\n  x = a;\n  y = 3;\n  return x;\n}\n";
    let u = unit(src);
    let t = run(&u, "f", &[5], 100).unwrap();
    let by_line: Vec<(u32, &str, bool)> = t
        .store_events
        .iter()
        .map(|e| (flow_line(&u, e.stmt), u.symbol(e.sym).name.as_str(), e.read_back))
        .collect();
    assert_eq!(by_line, vec![(2, "x", false), (3, "y", false), (4, "x", true), (5, "y", false)]);
}

#[test]
fn dump_lists_trace_and_outcome() {
    let u = unit("int main(void) {\n  int x = 1;\n  return x;\n}\n");
    let t = run(&u, "main", &[], 10).unwrap();
    let d = t.dump(&u);
    assert_eq!(d.lines().filter(|l| l.starts_with("EXEC ")).count(), 2);
    assert!(d.contains("STORE "));
    assert!(d.ends_with("OUTCOME terminated 1\n"));
}

/// Statements the oracle executed must not be statically unreachable, and
/// stores it saw read must not be statically dead.
fn assert_sound(src: &str, entry: &str) {
    let u = unit(src);
    let flow = analyze(&u).unwrap();
    let facts = sweep(&u, entry, DEFAULT_GRID, 2000).unwrap();
    for f in flow.functions.values() {
        for s in &facts.ever_executed {
            assert!(!f.reach.unreachable.contains(s), "executed statically unreachable {s}\n{src}");
        }
        for (s, sym) in &facts.witnessed_live_stores {
            assert!(!f.liveness.dead_stores.contains(&(*s, *sym)), "read store {s} flagged dead\n{src}");
        }
    }
}

#[test]
fn static_facts_are_sound_on_fixtures() {
    assert_sound(
        "int f(int a) {\n  int r = 0;\n  while (a > 0) { r += a; a--; }\n  if (r > 2) return r;\n  return -r;\n}\n",
        "f",
    );
    assert_sound(
        "int f(int a, int b) {\n  int t;\n  switch (a) { case 0: t = b; break; case 1: t = -b; default: t = 7; }\n  do { t--; } while (t > 3);\n  return t;\n}\n",
        "f",
    );
    assert_sound(
        "int f(int a) {\n  int i, s = 0;\n  for (i = 0; i < 3; i++) { if (i == a) continue; s += i; }\n  if (0) { s = 9; }\n  return s;\n}\n",
        "f",
    );
}

#[test]
fn execution_is_deterministic() {
    let u = unit("int f(int a) {\n  int s = 0;\n  while (s < 100) s += a;\n  return s;\n}\n");
    for a in -2..=2 {
        assert_eq!(run(&u, "f", &[a], 500).unwrap(), run(&u, "f", &[a], 500).unwrap());
    }
}

/// Small structured programs over `a`, `b` and locals `x`, `y`.
fn arb_stmt(depth: u32) -> BoxedStrategy<String> {
    let var = prop_oneof![Just("x"), Just("y")];
    let atom = prop_oneof![Just("a".to_string()), Just("b".to_string()), Just("x".to_string()), (0i32..4).prop_map(|v| v.to_string())];
    let expr = (atom.clone(), prop_oneof![Just("+"), Just("-"), Just("<"), Just("==")], atom)
        .prop_map(|(l, op, r)| format!("({l} {op} {r})"));
    let assign = (var, expr.clone()).prop_map(|(v, e)| format!("{v} = {e};"));
    if depth == 0 {
        return assign.boxed();
    }
    let inner = arb_stmt(depth - 1);
    prop_oneof![
        3 => assign,
        1 => (expr.clone(), inner.clone(), inner.clone()).prop_map(|(c, t, e)| format!("if {c} {{ {t} }} else {{ {e} }}")),
        1 => (expr.clone(), inner.clone()).prop_map(|(c, b)| format!("while {c} {{ {b} x = x - 1; }}")),
        1 => (0i32..2, inner.clone()).prop_map(|(k, b)| format!("if ({k}) {{ {b} }}")),
        1 => (inner.clone(), inner).prop_map(|(p, q)| format!("{p} {q}")),
    ]
    .boxed()
}

fn program(body: &str) -> String {
    format!("int f(int a, int b) {{\n  int x = 0;\n  int y = 1;\n  {body}\n  return x;\n}}\n")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fuel_prefix_property(body in arb_stmt(2), a in -2i64..=2, b in -2i64..=2, k in 1u64..60) {
        let u = unit(&program(&body));
        let big = run(&u, "f", &[a, b], 400).unwrap();
        let small = run(&u, "f", &[a, b], k).unwrap();
        prop_assert!(small.executed.len() as u64 <= k);
        prop_assert_eq!(&big.executed[..small.executed.len()], &small.executed[..]);
        if small.outcome != Outcome::FuelExhausted {
            prop_assert_eq!(&small.outcome, &big.outcome);
        }
    }

    #[test]
    fn static_facts_are_sound_on_generated_programs(body in arb_stmt(2)) {
        assert_sound(&program(&body), "f");
    }
}
