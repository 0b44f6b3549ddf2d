//! R21.14: memcmp shall not compare null-terminated strings, approximated
//! by the type of the compared objects. R21.19: pointers returned by the
//! string search functions into a const object must stay pointers to const.

use crate::frontend::ast::{Expr, ExprKind};
use crate::sema::{IntKind, TypeRepr};

use super::{all_exprs, parent_map, pointer_use, strip_casts, CheckContext, Diagnostic, PointerUse, Relation, Verdict, CSTRING};

const SEARCH_FUNCTIONS: &[&str] = &["memchr", "strchr", "strrchr", "strstr", "strpbrk"];

/// Pointee of the argument as written, before the conversion to the
/// parameter type.
fn written_pointee(ctx: &CheckContext<'_>, arg: &Expr) -> Option<TypeRepr> {
    ctx.unit.operand_type(strip_casts(arg)).pointee().cloned()
}

fn is_plain_char(t: &TypeRepr) -> bool {
    t.int_kind() == Some(IntKind::Char)
}

pub(super) fn check(ctx: &CheckContext<'_>) -> Vec<Diagnostic> {
    let unit = ctx.unit;
    let mut out = Vec::new();
    for f in unit.ast.functions() {
        let parents = parent_map(&f.body);
        for (_, e) in all_exprs(&f.body) {
            let ExprKind::Call { args, .. } = &e.kind else { continue };
            let Some(callee) = unit.direct_callee(e).filter(|s| s.builtin) else { continue };
            if callee.name == "memcmp" {
                let chars = args.iter().take(2).any(|a| written_pointee(ctx, a).is_some_and(|p| is_plain_char(&p)));
                if chars {
                    out.push(ctx.diag(
                        "R21.14",
                        CSTRING,
                        Verdict::definite(Relation::OverApprox),
                        e.span,
                        e.origin.clone(),
                        "memcmp used on character data that may be a null-terminated string",
                    ));
                }
            } else if SEARCH_FUNCTIONS.contains(&callee.name.as_str()) {
                let searched_const = args.first().and_then(|a| written_pointee(ctx, a)).is_some_and(|p| p.is_const);
                if searched_const && pointer_use(unit, &parents, e) != PointerUse::ReadOnly {
                    out.push(ctx.diag(
                        "R21.19",
                        CSTRING,
                        Verdict::definite(Relation::OverApprox),
                        e.span,
                        e.origin.clone(),
                        format!("result of '{}' on a const object is used as a pointer to non-const", callee.name),
                    ));
                }
            }
        }
    }
    out
}
