//! R22.8 / R22.9 / R22.10: a syntactic errno protocol. Each call to an
//! errno-setting function is immediately preceded by `errno = 0;` and
//! immediately followed by a statement comparing errno with `==` or `!=`
//! (one assignment of the call result may sit in between). Reads of errno
//! anywhere else are flagged.

use std::collections::HashSet;

use crate::frontend::ast::{BinaryOp, Expr, ExprKind, Stmt, StmtId, StmtKind};
use crate::sema::LibcTag;

use super::{CheckContext, Diagnostic, Relation, Verdict, ERRNO_PROTOCOL};

fn is_errno(ctx: &CheckContext<'_>, e: &Expr) -> bool {
    matches!(e.kind, ExprKind::Ident(_)) && ctx.unit.symbol_of(e).is_some_and(|s| s.libc_tag == Some(LibcTag::ErrnoObject))
}

/// Labels and case markers are transparent for sequencing.
fn unwrap_labels(mut s: &Stmt) -> &Stmt {
    loop {
        match &s.kind {
            StmtKind::Labeled { body, .. } | StmtKind::Case { body, .. } | StmtKind::Default { body } => s = body,
            _ => return s,
        }
    }
}

fn is_errno_reset(ctx: &CheckContext<'_>, s: &Stmt) -> bool {
    match &unwrap_labels(s).kind {
        StmtKind::Expr(Some(Expr { kind: ExprKind::Assign { op: None, lhs, rhs }, .. })) => {
            is_errno(ctx, lhs) && ctx.unit.const_value(rhs, false) == Ok(0)
        }
        _ => false,
    }
}

/// Calls to errno-setting functions evaluated by the statement itself.
fn errno_calls<'a>(ctx: &CheckContext<'_>, s: &'a Stmt) -> Vec<&'a Expr> {
    let mut out = Vec::new();
    let s = unwrap_labels(s);
    for r in s.own_exprs() {
        r.walk(&mut |e| {
            if matches!(e.kind, ExprKind::Call { .. }) && ctx.unit.callee_tag(e) == Some(LibcTag::ErrnoSetting) {
                out.push(e);
            }
        });
    }
    out
}

/// Reads of errno in the statement's own expressions.
fn errno_reads<'a>(ctx: &CheckContext<'_>, s: &'a Stmt) -> Vec<&'a Expr> {
    let mut writes = HashSet::new();
    let mut reads = Vec::new();
    for r in s.own_exprs() {
        r.walk(&mut |e| {
            if let ExprKind::Assign { op: None, lhs, .. } = &e.kind {
                writes.insert(lhs.id);
            }
        });
        r.walk(&mut |e| {
            if is_errno(ctx, e) && !writes.contains(&e.id) {
                reads.push(e);
            }
        });
    }
    reads
}

/// Whether the statement compares errno with `==` or `!=`.
fn tests_errno(ctx: &CheckContext<'_>, s: &Stmt) -> bool {
    let mut found = false;
    for r in unwrap_labels(s).own_exprs() {
        r.walk(&mut |e| {
            if let ExprKind::Binary { op: BinaryOp::Eq | BinaryOp::Ne, lhs, rhs } = &e.kind {
                if is_errno(ctx, lhs) || is_errno(ctx, rhs) {
                    found = true;
                }
            }
        });
    }
    found
}

/// Whether `s` is an expression statement assigning from a variable that
/// `call_stmt` assigned the call result to.
fn result_assignment(ctx: &CheckContext<'_>, call_stmt: &Stmt, s: &Stmt) -> bool {
    let target = match &unwrap_labels(call_stmt).kind {
        StmtKind::Expr(Some(Expr { kind: ExprKind::Assign { lhs, .. }, .. })) => ctx.unit.symbol_id_of(lhs),
        StmtKind::Decl(d) if d.declarators.len() == 1 => ctx.unit.declarator_symbol(d.declarators[0].declarator.id),
        _ => None,
    };
    let Some(target) = target else { return false };
    match &unwrap_labels(s).kind {
        StmtKind::Expr(Some(Expr { kind: ExprKind::Assign { rhs, .. }, .. })) => {
            let mut reads = false;
            rhs.walk(&mut |e| reads |= ctx.unit.symbol_id_of(e) == Some(target));
            reads
        }
        _ => false,
    }
}

pub(super) fn check(ctx: &CheckContext<'_>) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let verdict = Verdict::definite(Relation::Exact);
    for f in ctx.unit.ast.functions() {
        // Statement sequences: compound bodies, and every other statement as
        // a sequence of one.
        let mut sequences: Vec<Vec<&Stmt>> = Vec::new();
        f.body.walk(&mut |s| {
            for c in s.children() {
                if !matches!(s.kind, StmtKind::Compound(_)) {
                    sequences.push(vec![c]);
                }
            }
            if let StmtKind::Compound(items) = &s.kind {
                sequences.push(items.iter().collect());
            }
        });
        sequences.push(vec![&f.body]);
        let mut licensed: HashSet<StmtId> = HashSet::new();
        for seq in &sequences {
            for (i, s) in seq.iter().enumerate() {
                let calls = errno_calls(ctx, s);
                for (k, call) in calls.iter().enumerate() {
                    let name = ctx.unit.direct_callee(call).map_or("?", |s| s.name.as_str());
                    let reset = k == 0 && i > 0 && is_errno_reset(ctx, seq[i - 1]);
                    if !reset {
                        out.push(ctx.diag(
                            "R22.8",
                            ERRNO_PROTOCOL,
                            verdict,
                            call.span,
                            call.origin.clone(),
                            format!("errno is not set to zero immediately before calling '{name}'"),
                        ));
                    }
                }
                if calls.is_empty() {
                    continue;
                }
                let mut next = seq.get(i + 1).copied();
                if let (Some(n), Some(after)) = (next, seq.get(i + 2)) {
                    if !tests_errno(ctx, n) && result_assignment(ctx, s, n) {
                        next = Some(after);
                    }
                }
                match next {
                    Some(n) if tests_errno(ctx, n) => {
                        licensed.insert(unwrap_labels(n).id);
                    }
                    _ => {
                        let call = calls.last().unwrap();
                        let name = ctx.unit.direct_callee(call).map_or("?", |s| s.name.as_str());
                        out.push(ctx.diag(
                            "R22.9",
                            ERRNO_PROTOCOL,
                            verdict,
                            call.span,
                            call.origin.clone(),
                            format!("errno is not tested with == or != right after calling '{name}'"),
                        ));
                    }
                }
            }
        }
        f.body.walk(&mut |s| {
            if licensed.contains(&s.id) {
                return;
            }
            for r in errno_reads(ctx, s) {
                out.push(ctx.diag(
                    "R22.10",
                    ERRNO_PROTOCOL,
                    verdict,
                    r.span,
                    r.origin.clone(),
                    "errno is tested where no errno-setting call immediately precedes",
                ));
            }
        });
    }
    out
}
