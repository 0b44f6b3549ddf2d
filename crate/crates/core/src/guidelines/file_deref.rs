//! R22.5: pointers to FILE shall not be dereferenced. Flow-insensitive:
//! every dereference counts, reachable or not.

use crate::frontend::ast::{visit_unit_exprs, Expr, ExprKind, UnaryOp};

use super::{CheckContext, Diagnostic, Profile, Relation, Verdict, FILE_DEREF};

fn file_deref_form(ctx: &CheckContext<'_>, e: &Expr) -> Option<&'static str> {
    let fp = |x: &Expr| ctx.unit.operand_type(x).is_file_pointer();
    match &e.kind {
        ExprKind::Unary { op: UnaryOp::Deref, operand } if fp(operand) => Some("'*'"),
        ExprKind::Member { base, arrow: true, .. } if fp(base) => Some("'->'"),
        ExprKind::Index { base, index } if fp(base) || fp(index) => Some("subscript"),
        _ => None,
    }
}

pub(super) fn check(ctx: &CheckContext<'_>) -> Vec<Diagnostic> {
    let mut unreachable = std::collections::HashSet::new();
    if ctx.profile == Profile::Heuristic {
        // Code that constant folding proves unreachable cannot violate the
        // official rule.
        for f in ctx.unit.ast.functions() {
            let facts = ctx.facts(f);
            for s in &facts.reach.unreachable {
                for e in facts.stmts[s].own_exprs() {
                    e.walk(&mut |x| {
                        unreachable.insert(x.id);
                    });
                }
            }
        }
    }
    let mut out = Vec::new();
    visit_unit_exprs(&ctx.unit.ast, &mut |root| {
        root.walk(&mut |e| {
            if unreachable.contains(&e.id) {
                return;
            }
            if let Some(form) = file_deref_form(ctx, e) {
                out.push(ctx.diag(
                    "R22.5",
                    FILE_DEREF,
                    Verdict::definite(Relation::OverApprox),
                    e.span,
                    e.origin.clone(),
                    format!("pointer to FILE dereferenced with {form}"),
                ));
            }
        });
    });
    out
}
