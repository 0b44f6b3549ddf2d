//! R21.13: arguments to the character classification functions must be
//! EOF or representable as unsigned char.

use crate::frontend::ast::ExprKind;
use crate::sema::{eof_domain, EofClass, LibcTag};

use super::{all_exprs, CheckContext, Diagnostic, Relation, Verdict, EOF_DOMAIN};

pub(super) fn check(ctx: &CheckContext<'_>) -> Vec<Diagnostic> {
    let unit = ctx.unit;
    let mut out = Vec::new();
    for f in unit.ast.functions() {
        let facts = ctx.facts(f);
        for (_, e) in all_exprs(&f.body) {
            let ExprKind::Call { callee, args } = &e.kind else { continue };
            if unit.callee_tag(e) != Some(LibcTag::EofDomainConsumer) {
                continue;
            }
            let Some(arg) = args.first() else { continue };
            if eof_domain(unit, arg, &facts.reaching) == EofClass::Unsafe {
                let name = callee.as_ident().unwrap_or("?");
                out.push(ctx.diag(
                    "R21.13",
                    EOF_DOMAIN,
                    Verdict::definite(Relation::OverApprox),
                    arg.span,
                    arg.origin.clone(),
                    format!("argument to '{name}' is not known to be EOF or an unsigned char value"),
                ));
            }
        }
    }
    out
}
