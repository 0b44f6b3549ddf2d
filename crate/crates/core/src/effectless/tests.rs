use super::*;
use crate::flow::analyze;
use crate::sema::compile_str;

fn findings(src: &str, ledger: &JustificationLedger) -> Vec<EffectlessFinding> {
    let u = compile_str(src).unwrap_or_else(|e| panic!("{}", e.message()));
    let flow = analyze(&u).unwrap();
    detect(&u, &flow).iter().map(|r| classify(&u, r, ledger)).collect()
}

fn diags(src: &str, mode: Mode) -> Vec<Diagnostic> {
    let u = compile_str(src).unwrap_or_else(|e| panic!("{}", e.message()));
    let flow = analyze(&u).unwrap();
    run(&u, &flow, &JustificationLedger::default(), mode)
}

fn lines(d: &[Diagnostic]) -> Vec<u32> {
    d.iter().map(|d| d.span.line).collect()
}

const PRELUDE: &str = "#define OFFSET 0
#define SCALE 1
#define MAX 100
#define NUM_REPETITIONS 1
typedef struct { int a; int b; } T;
int x;
void do_things(void);
void do_X_if_necessary(void) {
#ifdef DO_X
  do_x();
#endif
}
";

fn with_prelude(body: &str) -> String {
    format!("{PRELUDE}{body}")
}

// Prelude is 12 lines; the first body line is 13.
const JUSTIFIED: &str = "void f(void) {
  x + OFFSET;
  x * SCALE;
  x * sizeof(T);
  do_X_if_necessary();
}
typedef enum {
  BIT0 = 1U << 0,
  BIT1 = 1U << 1,
  BIT2 = 1U << 2
} Bit_Masks;
";

const NEUTRAL: &str = "void g(void) {
  int i;
  x + 0;
  x + OFFSET;

  x * 1;
  x * SCALE;
  x * sizeof(T);

  do_X_if_necessary();

  for (i = 0; i < NUM_REPETITIONS; ++i) {
    do_things();
  }

  x = (x > MAX) ? MAX : x;
}
";

#[test]
fn justified_constructs_strict_flags_every_abstraction() {
    let d = diags(&with_prelude(JUSTIFIED), Mode::StrictR22);
    assert_eq!(lines(&d), vec![14, 15, 16, 17, 20]);
    assert!(d.iter().all(|d| d.rule_id == "R2.2" && d.check_id == EFFECTLESS));
    assert!(d.iter().all(|d| d.verdict == Verdict::possible(Relation::OverApprox)));
}

#[test]
fn justified_constructs_directive_is_silent() {
    assert!(diags(&with_prelude(JUSTIFIED), Mode::Directive).is_empty());
}

#[test]
fn justified_constructs_reasons() {
    let f = findings(&with_prelude(JUSTIFIED), &JustificationLedger::default());
    let at = |line: u32, kind: OperationKind| {
        f.iter().find(|f| f.span.line == line && f.kind == kind).map(|f| f.classification)
    };
    let j = Classification::Justified;
    assert_eq!(at(14, OperationKind::NeutralOperandOperation), Some(j(Reason::MacroAbstraction)));
    assert_eq!(at(14, OperationKind::NoEffectExpressionStatement), Some(j(Reason::MacroAbstraction)));
    assert_eq!(at(15, OperationKind::NeutralOperandOperation), Some(j(Reason::MacroAbstraction)));
    assert_eq!(at(16, OperationKind::NoEffectExpressionStatement), Some(j(Reason::SizeofAbstraction)));
    assert_eq!(at(17, OperationKind::NoEffectCallCandidate), Some(j(Reason::ConfigFunction)));
    assert_eq!(at(20, OperationKind::NeutralOperandOperation), Some(j(Reason::EnumSeries)));
    // Shifts by 1 and 2 are not neutral.
    assert_eq!(at(21, OperationKind::NeutralOperandOperation), None);
}

#[test]
fn neutral_listing_directive_flags_only_literal_neutrals() {
    let d = diags(&with_prelude(NEUTRAL), Mode::Directive);
    assert_eq!(lines(&d), vec![15, 18]);
    assert!(d.iter().all(|d| d.rule_id == DIRECTIVE_RULE));
    // Both detectors fire on `x + 0;` and merge into one diagnostic.
    assert!(d[0].message.contains("[neutral-operand-operation]"), "{}", d[0].message);
    assert!(d[0].message.contains("[no-effect-expression-statement]"), "{}", d[0].message);
}

#[test]
fn neutral_listing_saturate_and_loop_are_silent_in_both_modes() {
    let strict = diags(&with_prelude(NEUTRAL), Mode::StrictR22);
    let l = lines(&strict);
    for line in 24..=28 {
        assert!(!l.contains(&line), "line {line} in {l:?}");
    }
}

#[test]
fn directive_subset_of_strict() {
    for body in [JUSTIFIED, NEUTRAL] {
        let src = with_prelude(body);
        let s: Vec<_> = diags(&src, Mode::StrictR22).iter().map(|d| (d.file.clone(), d.span)).collect();
        for d in diags(&src, Mode::Directive) {
            assert!(s.contains(&(d.file.clone(), d.span)));
        }
    }
}

#[test]
fn off_mode_reports_nothing() {
    assert!(diags(&with_prelude(NEUTRAL), Mode::Off).is_empty());
}

#[test]
fn neutral_operands_by_operator() {
    let cases = [
        ("x + 0", true),
        ("0 + x", true),
        ("x - 0", true),
        ("0 - x", false),
        ("x * 1", true),
        ("1 * x", true),
        ("x / 1", true),
        ("1 / x", false),
        ("x | 0", true),
        ("x ^ 0", true),
        ("x & -1", true),
        ("x & 0xFFFFFFFF", true),
        ("x & 0xFF", false),
        ("x << 0", true),
        ("x >> 0", true),
        ("x * 2", false),
    ];
    for (e, neutral) in cases {
        let src = format!("int x; int y; void f(void) {{ y = {e}; }}");
        let f = findings(&src, &JustificationLedger::default());
        let hit = f.iter().any(|f| f.kind == OperationKind::NeutralOperandOperation);
        assert_eq!(hit, neutral, "{e}");
    }
}

#[test]
fn compound_assignment_with_neutral_operand() {
    let f = findings("int x; void f(void) { x += 0; x *= 1; x -= 1; }", &JustificationLedger::default());
    let n: Vec<u32> = f
        .iter()
        .filter(|f| f.kind == OperationKind::NeutralOperandOperation)
        .map(|f| f.span.column)
        .collect();
    assert_eq!(n.len(), 2);
}

#[test]
fn dead_store_overwritten_before_use() {
    let src = "int use(int v);
int f(void) {
  int x;
  x = 1;
  x = 2;
  return use(x);
}
";
    let d = diags(src, Mode::Directive);
    assert_eq!(lines(&d), vec![4]);
    assert!(d[0].message.contains("dead-store"));
}

#[test]
fn dead_store_in_initializer_is_not_reported() {
    let src = "int f(void) { int x = 1; x = 2; return x; }";
    assert!(diags(src, Mode::StrictR22).is_empty());
}

#[test]
fn dead_store_after_loop_is_not_loop_control() {
    let src = "void work(void);
void f(void) {
  int i;
  for (i = 0; i < 3; i++) {
    work();
  }
  i = 7;
}
";
    let f = findings(src, &JustificationLedger::default());
    let stores: Vec<_> = f.iter().filter(|f| f.kind == OperationKind::DeadStore).collect();
    assert_eq!(stores.len(), 1);
    assert_eq!(stores[0].span.line, 7);
    assert_eq!(stores[0].classification, Classification::Unjustified);
}

#[test]
fn empty_body_call_without_directive_is_unjustified() {
    let src = "void nop(void) { }
void f(void) { nop(); }
";
    let d = diags(src, Mode::Directive);
    assert_eq!(lines(&d), vec![2]);
    assert!(d[0].message.contains("no-effect-call-candidate"));
}

#[test]
fn void_cast_statement_is_intentional() {
    let src = "int x; void f(void) { (void)x; }";
    assert!(diags(src, Mode::StrictR22).is_empty());
}

#[test]
fn volatile_read_has_an_effect() {
    let src = "volatile int reg; void f(void) { reg; }";
    assert!(diags(src, Mode::StrictR22).is_empty());
}

#[test]
fn ledger_justifies_an_entry() {
    let src = "int x;\nvoid f(void) {\n  x + 0;\n}\n";
    let ledger = JustificationLedger::parse("input.c:3:effectless: reviewed\n", &[EFFECTLESS]).unwrap();
    let f = findings(src, &ledger);
    assert!(!f.is_empty());
    assert!(f.iter().all(|f| f.classification == Classification::Justified(Reason::LedgerEntry)));
}

#[test]
fn enum_series_needs_siblings() {
    let src = "enum E { A = 1 << 0, B = 2 };";
    let f = findings(src, &JustificationLedger::default());
    assert_eq!(f.len(), 1);
    assert_eq!(f[0].classification, Classification::Unjustified);
}

#[test]
fn dead_store_inside_controlled_loop_is_justified() {
    let src = "void f(void) {
  int i = 0;
  while (i < 3) {
    i = 1;
    i = 5;
  }
}
";
    let f = findings(src, &JustificationLedger::default());
    let stores: Vec<_> = f.iter().filter(|f| f.kind == OperationKind::DeadStore).collect();
    assert_eq!(stores.len(), 1);
    assert_eq!(stores[0].span.line, 4);
    assert_eq!(stores[0].classification, Classification::Justified(Reason::LoopControl));
}

#[test]
fn macro_rename_keeps_and_inlining_flips_classification() {
    let ledger = JustificationLedger::default();
    let kinds = |src: &str| -> Vec<(OperationKind, Classification)> {
        findings(src, &ledger).iter().map(|f| (f.kind, f.classification)).collect()
    };
    let a = kinds("#define OFFSET 0\nint x;\nvoid f(void) { x + OFFSET; }\n");
    let b = kinds("#define ZERO_SHIFT 0\nint x;\nvoid f(void) { x + ZERO_SHIFT; }\n");
    assert_eq!(a, b);
    let inlined = kinds("int x;\nvoid f(void) { x + 0; }\n");
    assert_eq!(a.len(), inlined.len());
    assert!(a.iter().all(|(_, c)| *c == Classification::Justified(Reason::MacroAbstraction)));
    assert!(inlined.iter().all(|(_, c)| *c == Classification::Unjustified));
}
