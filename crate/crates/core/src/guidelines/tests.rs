use super::*;
use crate::flow::analyze;
use crate::sema::compile_str;

fn run(src: &str, check: &str, profile: Profile) -> Vec<Diagnostic> {
    let u = compile_str(src).unwrap_or_else(|e| panic!("{}", e.message()));
    let flow = analyze(&u).unwrap();
    let ctx = CheckContext::new(&u, &flow, profile);
    run_checks(&ctx, &|id| id == check)
}

fn strict(src: &str, check: &str) -> Vec<Diagnostic> {
    run(src, check, Profile::Strict)
}

fn summary(d: &[Diagnostic]) -> Vec<(String, u32, VerdictKind)> {
    d.iter().map(|d| (d.rule_id.clone(), d.span.line, d.verdict.kind)).collect()
}

const R22_5: &str = "FILE *p;
int always_false_in_this_configuration(void);
void f(void) {
  if (always_false_in_this_configuration()) {
    FILE f = *p;
  }
}
";

#[test]
fn file_deref_flags_guarded_branch() {
    let d = strict(R22_5, FILE_DEREF);
    assert_eq!(summary(&d), vec![("R22.5".to_string(), 5, VerdictKind::Definite)]);
    assert_eq!(d[0].verdict.relation, Relation::OverApprox);
}

#[test]
fn file_deref_forms() {
    // One row per dereference form, plus a plain pointer use.
    let cases = [
        ("FILE *p; void f(void) { FILE g = *p; }", 1),
        ("FILE *p; int f(void) { return p->x; }", 1),
        ("FILE *p; void f(void) { FILE g = p[0]; }", 1),
        ("FILE *p; void f(void) { FILE g = 0[p]; }", 1),
        ("FILE *p; int f(void) { return fgetc(p); }", 0),
    ];
    for (src, n) in cases {
        assert_eq!(strict(src, FILE_DEREF).len(), n, "{src}");
    }
}

#[test]
fn heuristic_skips_folded_unreachable_deref() {
    let src = "FILE *p;\nvoid f(void) {\n if (0) {\n  FILE g = *p;\n }\n}\n";
    assert_eq!(strict(src, FILE_DEREF).len(), 1);
    assert!(run(src, FILE_DEREF, Profile::Heuristic).is_empty());
}

#[test]
fn readonly_params_examples() {
    let ex1 = "void f(uint32_t x) {\n  if (x < 0) {\n    x = 0;\n  }\n}\n";
    assert_eq!(summary(&strict(ex1, READONLY_PARAMS)), vec![("R17.8".to_string(), 3, VerdictKind::Definite)]);
    let ex2 = "extern void g(uint32_t *p);\nvoid f(uint32_t x) {\n  g(&x);\n}\n";
    assert_eq!(summary(&strict(ex2, READONLY_PARAMS)), vec![("R17.8".to_string(), 3, VerdictKind::Definite)]);
    let pledge = "extern void h(const uint32_t *p);\nvoid f(uint32_t x) {\n  h(&x);\n}\n";
    assert!(strict(pledge, READONLY_PARAMS).is_empty());
    let incr = "int f(int n) { n++; return n; }";
    assert_eq!(strict(incr, READONLY_PARAMS).len(), 1);
    let stored = "int *q; void f(int n) { q = &n; }";
    assert_eq!(strict(stored, READONLY_PARAMS).len(), 1);
}

#[test]
fn const_candidates() {
    let src = "size_t len(char *s) {\n size_t n = 0;\n while (s[n] != 0) { n++; }\n return n;\n}\n\
               void set(int *p) { *p = 1; }\n\
               extern void sink(int *q);\nvoid pass(int *p) { sink(p); }\n\
               int sum(int *a, int n) { int t = 0; for (int i = 0; i < n; i++) { t += *(a + i); } return t; }\n\
               void bump(int *a) { int *b = a + 1; *b = 0; }\n\
               void inc(struct { int v; } *r) { r->v++; }\n\
               int main(int argc, char **argv) { return argc; }\n";
    let d = strict(src, CONST_CANDIDATES);
    let names: Vec<&str> = d.iter().map(|d| d.message.split('\'').nth(1).unwrap()).collect();
    assert_eq!(names, vec!["s", "a"], "{d:#?}");
    assert!(d[0].message.ends_with("const char *"), "{}", d[0].message);
}

#[test]
fn init_at_decl_profiles() {
    let src = "int f(int c) {\n int x;\n if (c) x = 1;\n return x;\n}\n";
    assert_eq!(summary(&strict(src, INIT_AT_DECL)), vec![("R9.1".to_string(), 2, VerdictKind::Definite)]);
    assert_eq!(summary(&run(src, INIT_AT_DECL, Profile::Heuristic)), vec![("R9.1".to_string(), 4, VerdictKind::Possible)]);
    let clean = "int f(void) { int x = 0; return x; }";
    assert!(strict(clean, INIT_AT_DECL).is_empty());
    assert!(run(clean, INIT_AT_DECL, Profile::Heuristic).is_empty());
    let arr = "void use(int v);\nvoid f(void) {\n int a[4];\n use(a[0]);\n}\n";
    assert_eq!(summary(&run(arr, INIT_AT_DECL, Profile::Heuristic)), vec![("R9.1".to_string(), 4, VerdictKind::Possible)]);
    let stat = "int f(void) { static int s; return s; }";
    assert!(strict(stat, INIT_AT_DECL).is_empty());
}

const TRANSMIT: &str = "extern void transmit_bit(uint8_t b);
void transmit_octet(const uint8_t octet) {
  uint8_t mask = 1U;
  for (uint8_t bit = 0; bit < 8; ++bit) {
    transmit_bit(octet & mask);
    mask <<= 1U;
  }
}
";

#[test]
fn determinate_for_shapes() {
    assert!(strict(TRANSMIT, DETERMINATE_FOR).is_empty());
    let float = "void f(void) {\n for (float x = 0.0f; x < 1.0f; x += 0.1f) { }\n}\n";
    assert_eq!(summary(&strict(float, DETERMINATE_FOR)), vec![("R14.1".to_string(), 2, VerdictKind::Definite)]);
    let modified = "void g(int);\nvoid f(void) {\n for (int bit = 0; bit < 8; ++bit) {\n  bit = 0;\n }\n}\n";
    let d = strict(modified, DETERMINATE_FOR);
    assert_eq!(summary(&d), vec![("R14.2".to_string(), 4, VerdictKind::Definite)]);
    assert!(d[0].message.contains("modified in the body"));
    assert!(strict("void f(void) { for (;;) { } }", DETERMINATE_FOR).is_empty());
    let bound = "int g(void);\nvoid f(int n) {\n for (int i = 0; i < n; i++) { n--; }\n}\n";
    assert_eq!(strict(bound, DETERMINATE_FOR).len(), 1);
    let step = "void f(void) {\n for (int i = 0; i < 10; i *= 2) { }\n}\n";
    assert_eq!(strict(step, DETERMINATE_FOR).len(), 1);
    let call_bound = "int g(void);\nvoid f(void) {\n for (int i = 0; i < g(); i++) { }\n}\n";
    assert_eq!(strict(call_bound, DETERMINATE_FOR).len(), 1);
    let assign_init = "void f(void) {\n int i;\n for (i = 10; i >= 0; i -= 2) { }\n}\n";
    assert!(strict(assign_init, DETERMINATE_FOR).is_empty());
}

#[test]
fn recursion_table() {
    let self_call = "void f(void) { f(); }";
    assert_eq!(summary(&strict(self_call, NO_RECURSION)), vec![("R17.2".to_string(), 1, VerdictKind::Definite)]);
    let pair = "void g(void);\nvoid f(void) { g(); }\nvoid g(void) { f(); }\n";
    assert_eq!(strict(pair, NO_RECURSION).len(), 2);
    // Three files: indirect call with no address taken, with one taken, and
    // none at all.
    let no_addr = "void run(void (*cb)(void)) { cb(); }";
    let with_addr = "void h(void) {}\nvoid run(void (*cb)(void)) { cb(); }\nvoid m(void) { run(h); }\n";
    let direct = "void h(void) {}\nvoid m(void) { h(); }\n";
    let count = |src, p| run(src, NO_RECURSION, p).len();
    assert_eq!((count(no_addr, Profile::Strict), count(no_addr, Profile::Heuristic)), (1, 0));
    assert_eq!((count(with_addr, Profile::Strict), count(with_addr, Profile::Heuristic)), (1, 1));
    assert_eq!((count(direct, Profile::Strict), count(direct, Profile::Heuristic)), (0, 0));
    assert!(strict(no_addr, NO_RECURSION).iter().all(|d| d.verdict.kind == VerdictKind::Possible));
}

#[test]
fn eof_domain_check() {
    let user = "void f(const char *s) { char c = s[0]; if (isdigit(c)) { } }";
    assert_eq!(strict(user, EOF_DOMAIN).len(), 1);
    let cast = "void f(const char *s) { char c = s[0]; if (isdigit((unsigned char)c)) { } }";
    assert!(strict(cast, EOF_DOMAIN).is_empty());
    let fgetc_src = "void f(FILE *fp) { int c = fgetc(fp); if (isdigit(c)) { } }";
    assert!(strict(fgetc_src, EOF_DOMAIN).is_empty());
}

#[test]
fn memcmp_pointee_combinations() {
    // Every combination of plain char and uint8_t arguments.
    for (a, b) in [("char", "char"), ("char", "uint8_t"), ("uint8_t", "char"), ("uint8_t", "uint8_t")] {
        let src = format!("int f(void) {{ {a} x[8] = {{0}}; {b} y[8] = {{0}}; return memcmp(x, y, 8); }}");
        let expected = usize::from(a == "char" || b == "char");
        assert_eq!(strict(&src, CSTRING).len(), expected, "{a} {b}");
    }
    let ptrs = "int f(uint8_t *p, uint8_t *q, size_t n) { return memcmp(p, q, n); }";
    assert!(strict(ptrs, CSTRING).is_empty());
}

#[test]
fn search_result_constness() {
    let bad = "char *f(const char *cs) {\n char *r = strchr(cs, 'x');\n return r;\n}\n";
    assert_eq!(summary(&strict(bad, CSTRING)), vec![("R21.19".to_string(), 2, VerdictKind::Definite)]);
    let good = "const char *f(const char *cs) { const char *r = strchr(cs, 'x'); return r; }";
    assert!(strict(good, CSTRING).is_empty());
    let test_only = "int f(const char *cs) { return strchr(cs, 'x') != NULL; }";
    assert!(strict(test_only, CSTRING).is_empty());
    let nonconst = "char *f(char *s) { char *r = strchr(s, 'x'); return r; }";
    assert!(strict(nonconst, CSTRING).is_empty());
}

fn errno_rules(body: &str) -> Vec<String> {
    let src = format!("double d;\nchar *e;\nvoid handle(void);\nvoid f(const char *s) {{\n{body}\n}}\n");
    strict(&src, ERRNO_PROTOCOL).into_iter().map(|d| d.rule_id).collect()
}

#[test]
fn errno_protocol_windows() {
    let reset = "errno = 0;";
    let call = "d = strtod(s, &e);";
    let test = "if (errno != 0) { handle(); }";
    // Permutations of the three statements; only the canonical order is
    // clean.
    let perms: [[&str; 3]; 6] = [
        [reset, call, test],
        [reset, test, call],
        [call, reset, test],
        [call, test, reset],
        [test, reset, call],
        [test, call, reset],
    ];
    let results: Vec<Vec<String>> = perms.iter().map(|p| errno_rules(&p.join("\n"))).collect();
    assert!(results[0].is_empty(), "{:?}", results[0]);
    for (p, r) in perms.iter().zip(&results).skip(1) {
        assert!(!r.is_empty(), "{p:?}");
    }
    assert_eq!(results[1], vec!["R22.10", "R22.8", "R22.9"]);
    assert_eq!(results[2], vec!["R22.8", "R22.9", "R22.10"]);
    assert_eq!(errno_rules("d = strtod(s, &e);"), vec!["R22.8", "R22.9"]);
    let intervening = "errno = 0;\nd = strtod(s, &e);\nd = d * 2.0;\nif (errno == ERANGE) { handle(); }";
    assert!(errno_rules(intervening).is_empty());
    let strcpy_src = "char buf[8];\nstrcpy(buf, s);\nif (errno) { handle(); }";
    assert_eq!(errno_rules(strcpy_src), vec!["R22.10"]);
}

#[test]
fn ownership_paths() {
    let clean = "int f(const char *p) {\n FILE *f = fopen(p, \"r\");\n if (!f) return -1;\n fclose(f);\n return 0;\n}\n";
    assert!(strict(clean, STREAM_OWNERSHIP).is_empty(), "{:#?}", strict(clean, STREAM_OWNERSHIP));
    let early = "int f(const char *p, int c) {\n FILE *f = fopen(p, \"r\");\n if (f == NULL) return -1;\n if (c) return 0;\n fclose(f);\n return 0;\n}\n";
    let d = strict(early, STREAM_OWNERSHIP);
    assert_eq!(summary(&d), vec![("R22.1".to_string(), 2, VerdictKind::Definite)], "{d:#?}");
    let global = "FILE *g;\nvoid f(const char *p) {\n FILE *f = fopen(p, \"r\");\n g = f;\n}\n";
    assert_eq!(summary(&strict(global, STREAM_OWNERSHIP)), vec![("R22.1".to_string(), 3, VerdictKind::Possible)]);
    assert!(run(global, STREAM_OWNERSHIP, Profile::Heuristic).is_empty());
    let double = "void f(void) {\n int *m = malloc(4);\n free(m);\n free(m);\n}\n";
    assert_eq!(summary(&strict(double, STREAM_OWNERSHIP)), vec![("R22.1".to_string(), 4, VerdictKind::Definite)]);
    let partial = "void f(int c) {\n int *m = malloc(4);\n if (c) {\n  free(m);\n }\n}\n";
    let d = strict(partial, STREAM_OWNERSHIP);
    assert_eq!(d.len(), 1);
    assert!(d[0].message.contains("some paths only"));
    let discarded = "void f(void) {\n malloc(4);\n}\n";
    assert_eq!(strict(discarded, STREAM_OWNERSHIP).len(), 1);
    let mismatch = "void f(const char *p) {\n FILE *f = fopen(p, \"r\");\n if (f != NULL) { free(f); }\n}\n";
    assert_eq!(strict(mismatch, STREAM_OWNERSHIP).len(), 1);
    let loop_ok = "void f(int n) {\n for (int i = 0; i < n; i++) {\n  int *m = malloc(4);\n  free(m);\n }\n}\n";
    assert!(strict(loop_ok, STREAM_OWNERSHIP).is_empty());
    let assign_cond = "int f(const char *p) {\n FILE *f;\n if ((f = fopen(p, \"r\")) == NULL) return 1;\n fclose(f);\n return 0;\n}\n";
    assert!(strict(assign_cond, STREAM_OWNERSHIP).is_empty());
}

#[test]
fn rule_ids_exist_in_registry() {
    let srcs = [R22_5, TRANSMIT, "void f(void) { f(); }", "double d; void f(const char *s) { d = strtod(s, 0); }"];
    for src in srcs {
        let u = compile_str(src).unwrap();
        let flow = analyze(&u).unwrap();
        let ctx = CheckContext::new(&u, &flow, Profile::Strict);
        for d in run_checks(&ctx, &|_| true) {
            let g = lookup(&d.rule_id).expect("rule in registry");
            assert_eq!(g.implemented_check, Some(d.check_id.as_str()));
            assert_ne!(d.verdict.relation, Relation::UnderApprox);
        }
    }
}
