//! R17.8: function parameters are read-only. Type-based: any write to a
//! parameter, and any `&param` that is not a pointer to const, is flagged.

use std::collections::HashMap;

use crate::frontend::ast::{Expr, ExprKind, UnaryOp};
use crate::sema::Symbol;

use super::{all_exprs, parent_map, pointer_use, CheckContext, Diagnostic, PointerUse, Relation, Verdict, READONLY_PARAMS};

fn param<'u>(ctx: &CheckContext<'u>, e: &Expr) -> Option<&'u Symbol> {
    ctx.unit.symbol_of(e).filter(|s| s.is_parameter)
}

pub(super) fn check(ctx: &CheckContext<'_>) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let verdict = Verdict::definite(Relation::OverApprox);
    for f in ctx.unit.ast.functions() {
        let parents: HashMap<_, _> = parent_map(&f.body);
        for (_, e) in all_exprs(&f.body) {
            match &e.kind {
                ExprKind::Assign { lhs, .. } | ExprKind::Unary { operand: lhs, op: UnaryOp::PreInc | UnaryOp::PreDec | UnaryOp::PostInc | UnaryOp::PostDec } => {
                    if let Some(p) = param(ctx, lhs) {
                        out.push(ctx.diag("R17.8", READONLY_PARAMS, verdict, e.span, e.origin.clone(), format!("parameter '{}' is modified", p.name)));
                    }
                }
                ExprKind::Unary { op: UnaryOp::AddrOf, operand } => {
                    if let Some(p) = param(ctx, operand) {
                        if pointer_use(ctx.unit, &parents, e) != PointerUse::ReadOnly {
                            out.push(ctx.diag(
                                "R17.8",
                                READONLY_PARAMS,
                                verdict,
                                e.span,
                                e.origin.clone(),
                                format!("address of parameter '{}' escapes to a pointer to non-const", p.name),
                            ));
                        }
                    }
                }
                _ => {}
            }
        }
    }
    out
}
