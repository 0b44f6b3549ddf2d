use std::collections::BTreeSet;

use super::*;
use crate::frontend::ast::{ExprKind, StmtKind};
use crate::sema::{compile_str, TypedUnit};

fn unit(src: &str) -> TypedUnit {
    compile_str(src).unwrap_or_else(|e| panic!("{}", e.message()))
}

/// Line numbers of the statements in `ids`.
fn lines(facts: &FunctionFacts<'_>, ids: impl IntoIterator<Item = StmtId>) -> BTreeSet<u32> {
    ids.into_iter().map(|s| facts.stmts[&s].span.line).collect()
}

fn dead_lines(u: &TypedUnit, f: &str) -> BTreeSet<u32> {
    let facts = analyze_function(u, f).unwrap();
    facts.liveness.dead_sites.iter().map(|d| d.site.span.line).collect()
}

#[test]
fn if_without_else_has_four_blocks() {
    let u = unit("void f(int c) {\n int s = 0;\n if (c) {\n s = 1;\n }\n s = 2;\n}\n");
    let facts = analyze_function(&u, "f").unwrap();
    let cfg = &facts.cfg;
    assert_eq!(cfg.blocks.len(), 4, "{}", cfg.dump());
    let head = cfg.block_of(facts.stmts.values().find(|s| matches!(s.kind, StmtKind::If { .. })).unwrap().id).unwrap();
    let true_edge = cfg.successors(head).find(|e| e.kind == EdgeKind::BranchTrue).unwrap();
    assert_eq!(lines(&facts, cfg.blocks[true_edge.to.index()].stmts.iter().copied()), BTreeSet::from([4]));
    let join = cfg.block_of(facts.stmts.values().find(|s| s.span.line == 6).unwrap().id).unwrap();
    assert_eq!(cfg.predecessors(join).count(), 2);
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
fn transmit_octet_loop_shape_and_liveness() {
    let u = unit(TRANSMIT);
    let facts = analyze_function(&u, "transmit_octet").unwrap();
    let cfg = &facts.cfg;
    let header = cfg
        .blocks
        .iter()
        .find(|b| b.stmts.iter().any(|s| matches!(facts.stmts[s].kind, StmtKind::For { .. })))
        .unwrap();
    assert!(cfg.successors(header.id).any(|e| e.kind == EdgeKind::BranchTrue));
    let back = cfg.predecessors(header.id).find(|e| e.kind == EdgeKind::LoopBack).unwrap();
    // The back edge leaves the block holding the increment.
    let step = cfg.blocks[back.from.index()].stmts.last().unwrap();
    assert_eq!(facts.stmts[step].span.line, 4);
    assert!(dead_lines(&u, "transmit_octet").is_empty());
    assert!(facts.reach.unreachable.is_empty());
}

#[test]
fn infinite_loop_cuts_off_exit() {
    let u = unit("int g(void);\nvoid f(void) {\n while (1) {\n g();\n }\n g();\n}\n");
    let facts = analyze_function(&u, "f").unwrap();
    assert!(!facts.reach.reachable_blocks.contains(&facts.cfg.exit));
    assert_eq!(lines(&facts, facts.reach.unreachable.iter().copied()), BTreeSet::from([6]));
}

#[test]
fn constant_false_branch_is_unreachable() {
    let u = unit("int g(void);\nvoid f(void) {\n if (0) {\n g();\n }\n}\n");
    let facts = analyze_function(&u, "f").unwrap();
    assert_eq!(lines(&facts, facts.reach.unreachable.iter().copied()), BTreeSet::from([4]));
    assert_eq!(facts.reach.constant_conditions.values().copied().collect::<Vec<_>>(), vec![0]);
}

#[test]
fn const_local_and_enumerator_fold_but_parameters_do_not() {
    let u = unit(
        "enum { OFF = 0 };\nint g(void);\nvoid f(int p) {\n const int k = 0;\n if (k) { g(); }\n if (OFF) { g(); }\n if (p * 0) { g(); }\n}\n",
    );
    let facts = analyze_function(&u, "f").unwrap();
    assert_eq!(lines(&facts, facts.reach.unreachable.iter().copied()), BTreeSet::from([5, 6]));
}

#[test]
fn statement_after_return_is_unreachable() {
    let u = unit("int f(void) {\n return 1;\n int y = 2;\n return y;\n}\n");
    let facts = analyze_function(&u, "f").unwrap();
    assert_eq!(lines(&facts, facts.reach.unreachable.iter().copied()), BTreeSet::from([3, 4]));
}

#[test]
fn calls_never_fold() {
    let u = unit(
        "FILE *p;\nint always_false_in_this_configuration(void);\nvoid f(void) {\n if (always_false_in_this_configuration()) {\n  FILE f = *p;\n }\n}\n",
    );
    let facts = analyze_function(&u, "f").unwrap();
    assert!(facts.reach.unreachable.is_empty());
    assert!(facts.reach.constant_conditions.is_empty());
}

#[test]
fn overwritten_store_is_dead() {
    let u = unit("void use(int v);\nvoid f(void) {\n int x;\n x = 1;\n x = 2;\n use(x);\n}\n");
    assert_eq!(dead_lines(&u, "f"), BTreeSet::from([4]));
    let facts = analyze_function(&u, "f").unwrap();
    assert_eq!(facts.liveness.dead_stores.len(), 1);
}

#[test]
fn stores_through_pointers_and_to_escaping_locals_are_never_dead() {
    let u = unit(
        "void g(int *q);\nvoid f(int *p) {\n *p = 1;\n int y;\n g(&y);\n y = 3;\n static int s;\n s = 4;\n}\n",
    );
    assert!(dead_lines(&u, "f").is_empty());
}

#[test]
fn final_store_to_parameter_is_dead() {
    let u = unit("int f(int a) {\n int r = a;\n a = 0;\n return r;\n}\n");
    assert_eq!(dead_lines(&u, "f"), BTreeSet::from([3]));
}

#[test]
fn conditional_store_does_not_kill() {
    let u = unit("int g(void);\nint f(int c) {\n int x = 1;\n c && (x = g());\n return x;\n}\n");
    assert!(dead_lines(&u, "f").is_empty());
}

#[test]
fn maybe_uninit_matches_path_enumeration() {
    let src = "int f(int c) {\n int x;\n if (c) x = 1;\n return x;\n}\n";
    let u = unit(src);
    let facts = analyze_function(&u, "f").unwrap();
    let flagged: Vec<u32> = facts.definite.maybe_uninit_reads.iter().map(|r| r.span.line).collect();
    // Enumerate both paths by hand: c = 0 reads x unwritten, c = 1 does not.
    let uninit_paths = [0, 1].iter().filter(|&&c| c == 0).count();
    assert_eq!(uninit_paths, 1);
    assert_eq!(flagged, vec![4]);
    assert!(facts.definite.unknown_reads.is_empty());
}

#[test]
fn initialized_local_is_fine() {
    let u = unit("int f(void) {\n int x = 0;\n return x;\n}\n");
    let facts = analyze_function(&u, "f").unwrap();
    assert!(facts.definite.maybe_uninit_reads.is_empty());
    assert!(facts.definite.unknown_reads.is_empty());
}

#[test]
fn arrays_go_to_unknown_bucket() {
    let u = unit("void use(int v);\nvoid f(void) {\n int a[4];\n use(a[0]);\n}\n");
    let facts = analyze_function(&u, "f").unwrap();
    assert!(facts.definite.maybe_uninit_reads.is_empty());
    assert_eq!(facts.definite.unknown_reads.len(), 1);
}

#[test]
fn loop_carried_uninit_read() {
    let u = unit("int f(int n) {\n int s;\n int i;\n for (i = 0; i < n; i++) {\n  s = i;\n }\n return s;\n}\n");
    let facts = analyze_function(&u, "f").unwrap();
    let flagged: Vec<u32> = facts.definite.maybe_uninit_reads.iter().map(|r| r.span.line).collect();
    assert_eq!(flagged, vec![7]);
}

#[test]
fn reaching_definitions_feed_eof_domain() {
    let u = unit("int f(int k) {\n int c = 1;\n if (k) c = 2;\n return c;\n}\n");
    let facts = analyze_function(&u, "f").unwrap();
    let ret = facts.stmts.values().find(|s| matches!(s.kind, StmtKind::Return(_))).unwrap();
    let StmtKind::Return(Some(e)) = &ret.kind else { unreachable!() };
    let defs = crate::sema::ReachingDefs::defs_for(&facts.reaching, e).unwrap();
    let values: BTreeSet<i128> = defs
        .iter()
        .map(|d| match d {
            crate::sema::ReachingDef::Value(v) => match v.kind {
                ExprKind::IntLit { value, .. } => value as i128,
                _ => -1,
            },
            crate::sema::ReachingDef::Opaque => -2,
        })
        .collect();
    assert_eq!(values, BTreeSet::from([1, 2]));
}

#[test]
fn call_graph_cycles_and_indirect_sites() {
    let u = unit(
        "void f(void) { f(); }\nvoid h(void);\nvoid g(void);\nvoid k(void) { g(); }\nvoid g(void) { k(); }\nvoid h(void) {}\nvoid m(void) {\n void (*cb)(void);\n cb = &h;\n cb();\n (*f)();\n}\n",
    );
    let g = build_call_graph(&u);
    assert!(g.callees("f").any(|c| c == "f"));
    assert_eq!(g.cycles, vec![vec!["f".to_string()], vec!["g".to_string(), "k".to_string()]]);
    assert_eq!(g.indirect_sites.len(), 1);
    assert_eq!(g.indirect_sites[0].1.line, 10);
    assert!(g.address_taken.contains("h"));
    assert!(!g.address_taken.contains("f"));
    assert!(!g.callees("m").any(|c| c == "h"));
}

#[test]
fn undefined_label_is_fatal() {
    let u = unit("void f(void) {\n goto out;\n}\n");
    let err = analyze(&u).unwrap_err();
    assert_eq!(err.span.line, 2);
}

#[test]
fn liveness_is_idempotent() {
    let u = unit(TRANSMIT);
    let facts = analyze_function(&u, "transmit_octet").unwrap();
    let again = liveness_dead_stores(&facts.cfg, &u, &facts.effects);
    assert_eq!(again, facts.liveness);
}

#[test]
fn every_executable_statement_in_exactly_one_block() {
    let u = unit(
        "int g(int);\nint f(int a) {\n int r = 0;\n switch (a) {\n case 1: r = 1; break;\n case 2: r = 2;\n default: r += 3;\n }\n do { r--; } while (r > 10);\nagain:\n if (r < 0) goto again;\n for (;;) { if (g(r)) break; continue; }\n return r;\n}\n",
    );
    let facts = analyze_function(&u, "f").unwrap();
    let mut seen = BTreeSet::new();
    for s in facts.cfg.all_stmts() {
        assert!(seen.insert(s), "statement {s} in two blocks");
    }
    let expected: BTreeSet<StmtId> = facts.stmts.values().filter(|s| s.is_executable()).map(|s| s.id).collect();
    assert_eq!(seen, expected);
    assert_eq!(facts.cfg.predecessors(facts.cfg.entry).count(), 0);
    for b in &facts.cfg.blocks {
        if b.id != facts.cfg.exit {
            assert!(facts.cfg.successors(b.id).count() >= 1, "{}", facts.cfg.dump());
        }
    }
}
