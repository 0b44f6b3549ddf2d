//! R8.13: a pointer should point to a const-qualified type whenever
//! possible. Flags pointer parameters and locals whose pointee is never
//! written through and never handed to a non-const context.

use std::collections::HashMap;

use crate::frontend::ast::ExprKind;
use crate::sema::{Storage, SymbolId, TypeKind};

use super::{all_exprs, parent_map, pointer_use, CheckContext, Diagnostic, PointerUse, Relation, Verdict, CONST_CANDIDATES};

pub(super) fn check(ctx: &CheckContext<'_>) -> Vec<Diagnostic> {
    let unit = ctx.unit;
    let mut out = Vec::new();
    for f in unit.ast.functions() {
        let Some(info) = unit.function_info(f.name()) else { continue };
        let candidates: Vec<SymbolId> = info
            .params
            .iter()
            .filter(|_| f.name() != "main")
            .chain(info.locals.iter())
            .copied()
            .filter(|&s| {
                let sym = unit.symbol(s);
                sym.storage == Storage::Automatic
                    && matches!(&sym.ty.kind, TypeKind::Pointer(p) if !p.is_const && !p.is_function() && !p.is_opaque("FILE"))
            })
            .collect();
        if candidates.is_empty() {
            continue;
        }
        let parents = parent_map(&f.body);
        let mut blocked: HashMap<SymbolId, bool> = HashMap::new();
        for (_, e) in all_exprs(&f.body) {
            if !matches!(e.kind, ExprKind::Ident(_)) {
                continue;
            }
            let Some(s) = unit.symbol_id_of(e) else { continue };
            if !candidates.contains(&s) {
                continue;
            }
            if pointer_use(unit, &parents, e) != PointerUse::ReadOnly {
                blocked.insert(s, true);
            }
        }
        for s in candidates {
            if blocked.contains_key(&s) || unit.symbol(s).address_taken {
                continue;
            }
            let sym = unit.symbol(s);
            let pointee = sym.ty.pointee().expect("pointer").clone().with_quals(true, sym.ty.pointee().unwrap().is_volatile);
            let suggested = crate::sema::TypeRepr::pointer_to(pointee);
            out.push(ctx.diag(
                "R8.13",
                CONST_CANDIDATES,
                Verdict::definite(Relation::OverApprox),
                sym.decl_span,
                Default::default(),
                format!("'{}' is never written through; it should be {}", sym.name, ctx.type_name(&suggested)),
            ));
        }
    }
    out
}
