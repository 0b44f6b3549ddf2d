//! R9.1: automatic objects shall not be read before being set. The strict
//! profile demands an initializer on every automatic declaration; the
//! heuristic profile reports the reads definite-assignment cannot clear.

use crate::frontend::ast::StmtKind;
use crate::sema::Storage;

use super::{CheckContext, Diagnostic, Profile, Relation, Verdict, INIT_AT_DECL};

pub(super) fn check(ctx: &CheckContext<'_>) -> Vec<Diagnostic> {
    let unit = ctx.unit;
    let mut out = Vec::new();
    for f in unit.ast.functions() {
        match ctx.profile {
            Profile::Strict => f.body.walk(&mut |s| {
                let StmtKind::Decl(d) = &s.kind else { return };
                for i in &d.declarators {
                    let Some(sym) = unit.declarator_symbol(i.declarator.id) else { continue };
                    let sym = unit.symbol(sym);
                    if sym.storage != Storage::Automatic || i.init.is_some() {
                        continue;
                    }
                    let (span, origin) = match &i.declarator.name {
                        Some(n) => (n.span, n.origin.clone()),
                        None => (i.declarator.span, Default::default()),
                    };
                    out.push(ctx.diag(
                        "R9.1",
                        INIT_AT_DECL,
                        Verdict::definite(Relation::OverApprox),
                        span,
                        origin,
                        format!("automatic variable '{}' is declared without an initializer", sym.name),
                    ));
                }
            }),
            Profile::Heuristic => {
                let facts = ctx.facts(f);
                for r in &facts.definite.maybe_uninit_reads {
                    out.push(ctx.diag(
                        "R9.1",
                        INIT_AT_DECL,
                        Verdict::possible(Relation::OverApprox),
                        r.span,
                        Default::default(),
                        format!("'{}' may be read before it is set", unit.symbol(r.sym).name),
                    ));
                }
                for r in &facts.definite.unknown_reads {
                    out.push(ctx.diag(
                        "R9.1",
                        INIT_AT_DECL,
                        Verdict::possible(Relation::OverApprox),
                        r.span,
                        Default::default(),
                        format!("cannot tell whether '{}' is set before this read", unit.symbol(r.sym).name),
                    ));
                }
            }
        }
    }
    out
}
