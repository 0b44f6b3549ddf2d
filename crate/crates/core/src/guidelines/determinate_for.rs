//! R14.1 / R14.2: `for` loops must have a well-formed loop counter. The
//! check imposes a syntactic shape: one integer counter initialized in the
//! first clause, compared against a loop-invariant bound, stepped by a
//! constant, and left alone by the body. `for (;;)` is accepted.

use std::collections::BTreeSet;

use crate::frontend::ast::{BinaryOp, Expr, ExprKind, Initializer, Stmt, StmtKind, UnaryOp};
use crate::frontend::SourceSpan;
use crate::sema::{Storage, SymbolId};

use super::{CheckContext, Diagnostic, Relation, Verdict, DETERMINATE_FOR};

pub(super) fn check(ctx: &CheckContext<'_>) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for f in ctx.unit.ast.functions() {
        f.body.walk(&mut |s| {
            if let StmtKind::For { init, cond, step, body } = &s.kind {
                check_loop(ctx, s, init.as_deref(), cond.as_ref(), step.as_deref(), body, &mut out);
            }
        });
    }
    out
}

fn report(ctx: &CheckContext<'_>, out: &mut Vec<Diagnostic>, rule: &str, span: SourceSpan, msg: String) {
    out.push(ctx.diag(rule, DETERMINATE_FOR, Verdict::definite(Relation::OverApprox), span, Default::default(), msg));
}

/// The counter set by the first clause, and the span to blame.
fn init_counter(ctx: &CheckContext<'_>, init: &Stmt) -> Option<SymbolId> {
    let unit = ctx.unit;
    match &init.kind {
        StmtKind::Decl(d) if d.declarators.len() == 1 => {
            let i = &d.declarators[0];
            match &i.init {
                Some(Initializer::Expr(_)) => unit.declarator_symbol(i.declarator.id),
                _ => None,
            }
        }
        StmtKind::Expr(Some(Expr { kind: ExprKind::Assign { op: None, lhs, .. }, .. })) => unit.symbol_id_of(lhs),
        _ => None,
    }
}

fn is_counter(ctx: &CheckContext<'_>, e: &Expr, c: SymbolId) -> bool {
    matches!(e.kind, ExprKind::Ident(_)) && ctx.unit.symbol_id_of(e) == Some(c)
}

/// Symbols a statement or expression may modify, with whether any call or
/// store through a pointer happens.
#[derive(Default)]
struct Writes {
    symbols: BTreeSet<SymbolId>,
    address_taken: BTreeSet<SymbolId>,
    opaque: bool,
}

impl Writes {
    fn expr(&mut self, ctx: &CheckContext<'_>, e: &Expr) {
        e.walk(&mut |x| match &x.kind {
            ExprKind::Assign { lhs, .. } | ExprKind::Unary { op: UnaryOp::PreInc | UnaryOp::PreDec | UnaryOp::PostInc | UnaryOp::PostDec, operand: lhs } => {
                match ctx.unit.symbol_id_of(lhs) {
                    Some(s) if matches!(lhs.kind, ExprKind::Ident(_)) => {
                        self.symbols.insert(s);
                    }
                    _ => self.opaque = true,
                }
            }
            ExprKind::Unary { op: UnaryOp::AddrOf, operand } => {
                if let Some(s) = ctx.unit.symbol_id_of(operand) {
                    self.address_taken.insert(s);
                }
            }
            ExprKind::Call { .. } => self.opaque = true,
            _ => {}
        });
    }

    fn stmt(&mut self, ctx: &CheckContext<'_>, s: &Stmt) {
        s.walk(&mut |x| {
            for e in x.own_exprs() {
                self.expr(ctx, e);
            }
        });
    }
}

/// Whether `bound` keeps its value while the loop runs, given what the body
/// and step may write.
fn invariant(ctx: &CheckContext<'_>, bound: &Expr, writes: &Writes, counter: SymbolId) -> bool {
    let unit = ctx.unit;
    if unit.const_value(bound, true).is_ok() {
        return true;
    }
    let mut ok = true;
    bound.walk(&mut |x| match &x.kind {
        ExprKind::Ident(_) => {
            let Some(s) = unit.symbol_id_of(x) else { return };
            let sym = unit.symbol(s);
            if sym.enum_value.is_some() || sym.storage == Storage::Function {
                return;
            }
            if s == counter || sym.ty.is_volatile || writes.symbols.contains(&s) || writes.address_taken.contains(&s) {
                ok = false;
            }
            // Globals and address-taken locals can change behind a call or a
            // store through a pointer.
            if (sym.storage != Storage::Automatic || sym.address_taken) && writes.opaque {
                ok = false;
            }
        }
        ExprKind::Assign { .. } | ExprKind::Call { .. } => ok = false,
        ExprKind::Unary { op, .. } if op.is_inc_dec() || *op == UnaryOp::Deref => ok = false,
        ExprKind::Index { .. } | ExprKind::Member { .. } => ok = false,
        _ => {}
    });
    ok
}

fn step_ok(ctx: &CheckContext<'_>, step: &Expr, c: SymbolId) -> bool {
    let int_const = |e: &Expr| ctx.unit.expr_type(e).is_integer() && ctx.unit.const_value(e, true).is_ok();
    match &step.kind {
        ExprKind::Unary { op, operand } if op.is_inc_dec() => is_counter(ctx, operand, c),
        ExprKind::Assign { op: Some(BinaryOp::Add | BinaryOp::Sub), lhs, rhs } => is_counter(ctx, lhs, c) && int_const(rhs),
        ExprKind::Assign { op: None, lhs, rhs } if is_counter(ctx, lhs, c) => match &rhs.kind {
            ExprKind::Binary { op: BinaryOp::Add, lhs: a, rhs: b } => {
                (is_counter(ctx, a, c) && int_const(b)) || (is_counter(ctx, b, c) && int_const(a))
            }
            ExprKind::Binary { op: BinaryOp::Sub, lhs: a, rhs: b } => is_counter(ctx, a, c) && int_const(b),
            _ => false,
        },
        _ => false,
    }
}

#[allow(clippy::too_many_arguments)]
fn check_loop(
    ctx: &CheckContext<'_>,
    s: &Stmt,
    init: Option<&Stmt>,
    cond: Option<&Expr>,
    step: Option<&Stmt>,
    body: &Stmt,
    out: &mut Vec<Diagnostic>,
) {
    let unit = ctx.unit;
    let step_expr = step.and_then(|st| match &st.kind {
        StmtKind::Expr(Some(e)) => Some(e),
        _ => None,
    });
    if init.is_none() && cond.is_none() && step_expr.is_none() {
        return;
    }
    let Some(counter) = init.and_then(|i| init_counter(ctx, i)) else {
        let span = init.map_or(s.span, |i| i.span);
        report(ctx, out, "R14.2", span, "first clause does not initialize a single loop counter".into());
        return;
    };
    let sym = unit.symbol(counter);
    let name = &sym.name;
    if sym.ty.is_floating() {
        report(ctx, out, "R14.1", sym.decl_span, format!("loop counter '{name}' has floating type"));
        return;
    }
    if !sym.ty.is_integer() || sym.ty.is_bool() {
        report(ctx, out, "R14.2", init.unwrap().span, format!("loop counter '{name}' is not of integer type"));
        return;
    }
    if sym.storage != Storage::Automatic {
        report(ctx, out, "R14.2", init.unwrap().span, format!("loop counter '{name}' is not a local variable"));
    }
    if sym.address_taken {
        report(ctx, out, "R14.2", init.unwrap().span, format!("address of loop counter '{name}' is taken"));
    }
    let mut writes = Writes::default();
    writes.stmt(ctx, body);
    if let Some(e) = step_expr {
        let mut w = Writes::default();
        w.expr(ctx, e);
        writes.opaque |= w.opaque;
        writes.address_taken.extend(w.address_taken);
        writes.symbols.extend(w.symbols.into_iter().filter(|&x| x != counter));
    }
    match cond {
        None => report(ctx, out, "R14.2", s.span, "loop has no condition".into()),
        Some(cond) => {
            let bound = match &cond.kind {
                ExprKind::Binary { op: BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge, lhs, rhs } => {
                    if is_counter(ctx, lhs, counter) {
                        Some(&**rhs)
                    } else if is_counter(ctx, rhs, counter) {
                        Some(&**lhs)
                    } else {
                        None
                    }
                }
                _ => None,
            };
            match bound {
                None => report(ctx, out, "R14.2", cond.span, format!("condition does not compare loop counter '{name}' with a relational operator")),
                Some(b) if !invariant(ctx, b, &writes, counter) => {
                    report(ctx, out, "R14.2", b.span, "loop bound is not loop-invariant".into())
                }
                Some(_) => {}
            }
        }
    }
    match step_expr {
        Some(e) if step_ok(ctx, e, counter) => {}
        Some(e) => report(ctx, out, "R14.2", e.span, format!("increment is not '{name}' plus or minus an integer constant")),
        None => report(ctx, out, "R14.2", s.span, "loop has no increment".into()),
    }
    if writes.symbols.contains(&counter) || writes.address_taken.contains(&counter) {
        let mut span = body.span;
        body.walk(&mut |x| {
            for e in x.own_exprs() {
                e.walk(&mut |y| {
                    let target = match &y.kind {
                        ExprKind::Assign { lhs, .. } => Some(lhs),
                        ExprKind::Unary { op, operand } if op.is_inc_dec() || *op == UnaryOp::AddrOf => Some(operand),
                        _ => None,
                    };
                    if target.is_some_and(|t| is_counter(ctx, t, counter)) && span == body.span {
                        span = y.span;
                    }
                });
            }
        });
        report(ctx, out, "R14.2", span, format!("loop counter '{name}' is modified in the body"));
    }
}
