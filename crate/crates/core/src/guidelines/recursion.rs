//! R17.2: no recursion. Cycles in the direct call graph are definite; calls
//! through pointers leave recursion unexcluded.

use super::{CheckContext, Diagnostic, Profile, Relation, Verdict, NO_RECURSION};

pub(super) fn check(ctx: &CheckContext<'_>) -> Vec<Diagnostic> {
    let unit = ctx.unit;
    let g = &ctx.flow.call_graph;
    let mut out = Vec::new();
    for cycle in &g.cycles {
        let path = if cycle.len() == 1 { format!("{0} -> {0}", cycle[0]) } else { cycle.join(", ") };
        for name in cycle {
            let Some(f) = unit.ast.function(name) else { continue };
            let span = f.declarator.name.as_ref().map_or(f.span, |n| n.span);
            out.push(ctx.diag(
                "R17.2",
                NO_RECURSION,
                Verdict::definite(Relation::OverApprox),
                span,
                Default::default(),
                if cycle.len() == 1 {
                    format!("function '{name}' calls itself ({path})")
                } else {
                    format!("function '{name}' is part of a call cycle ({path})")
                },
            ));
        }
    }
    let report_indirect = match ctx.profile {
        Profile::Strict => true,
        Profile::Heuristic => !g.address_taken.is_empty(),
    };
    if report_indirect {
        for (_, span) in &g.indirect_sites {
            out.push(ctx.diag(
                "R17.2",
                NO_RECURSION,
                Verdict::possible(Relation::OverApprox),
                *span,
                Default::default(),
                "recursion not excludable through function pointer",
            ));
        }
    }
    out
}
