//! Forward may-be-uninitialized analysis for automatic locals.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::frontend::ast::{ExprId, StmtId};
use crate::frontend::SourceSpan;
use crate::sema::{Storage, SymbolId, TypedUnit};

use super::cfg::{BlockId, Cfg};
use super::effects::Effect;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UninitRead {
    pub stmt: StmtId,
    pub sym: SymbolId,
    pub expr: ExprId,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DefiniteAssignment {
    /// Reads of tracked scalars that some path reaches with no prior write.
    pub maybe_uninit_reads: BTreeSet<UninitRead>,
    /// Reads of arrays, records and address-taken locals declared without
    /// an initializer; the analysis cannot tell whether they were written.
    pub unknown_reads: BTreeSet<UninitRead>,
}

type Effects<'a> = HashMap<StmtId, Vec<Effect<'a>>>;

fn is_local(unit: &TypedUnit, sym: SymbolId) -> bool {
    let s = unit.symbol(sym);
    s.storage == Storage::Automatic && !s.is_parameter
}

pub fn definite_assignment(cfg: &Cfg, unit: &TypedUnit, effects: &Effects<'_>) -> DefiniteAssignment {
    let function_locals: BTreeSet<SymbolId> = unit
        .function_info(&cfg.function)
        .map(|f| f.locals.iter().copied().filter(|&s| is_local(unit, s) && unit.symbol(s).is_tracked_scalar()).collect())
        .unwrap_or_default();
    let mut ins: BTreeMap<BlockId, BTreeSet<SymbolId>> = cfg.blocks.iter().map(|b| (b.id, BTreeSet::new())).collect();
    ins.insert(cfg.entry, function_locals);
    let mut outs: BTreeMap<BlockId, Option<BTreeSet<SymbolId>>> = cfg.blocks.iter().map(|b| (b.id, None)).collect();
    let mut reads = BTreeSet::new();
    loop {
        let mut changed = false;
        for b in &cfg.blocks {
            let mut state = if b.id == cfg.entry { ins[&b.id].clone() } else { BTreeSet::new() };
            for e in cfg.predecessors(b.id) {
                if let Some(o) = &outs[&e.from] {
                    state.extend(o.iter().copied());
                }
            }
            for s in &b.stmts {
                for e in effects.get(s).map(Vec::as_slice).unwrap_or_default() {
                    step(unit, *s, e, &mut state, &mut reads);
                }
            }
            if outs[&b.id].as_ref() != Some(&state) {
                outs.insert(b.id, Some(state));
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut unknown_reads = BTreeSet::new();
    let untracked_uninit: BTreeSet<SymbolId> = unit
        .function_info(&cfg.function)
        .map(|f| f.locals.iter().copied().filter(|&s| is_local(unit, s) && !unit.symbol(s).is_tracked_scalar()).collect())
        .unwrap_or_default();
    for b in &cfg.blocks {
        for s in &b.stmts {
            for e in effects.get(s).map(Vec::as_slice).unwrap_or_default() {
                if let Effect::Use { sym, expr } = e {
                    if untracked_uninit.contains(sym) && !unit.symbol(*sym).defined {
                        unknown_reads.insert(UninitRead { stmt: *s, sym: *sym, expr: expr.id, span: expr.span });
                    }
                }
            }
        }
    }
    DefiniteAssignment { maybe_uninit_reads: reads, unknown_reads }
}

fn step(unit: &TypedUnit, stmt: StmtId, e: &Effect<'_>, state: &mut BTreeSet<SymbolId>, reads: &mut BTreeSet<UninitRead>) {
    match *e {
        Effect::Use { sym, expr } => {
            if state.contains(&sym) {
                reads.insert(UninitRead { stmt, sym, expr: expr.id, span: expr.span });
            }
        }
        Effect::Def { sym, killing, .. } => {
            if killing {
                state.remove(&sym);
            }
        }
        Effect::Declare { sym } => {
            if is_local(unit, sym) && unit.symbol(sym).is_tracked_scalar() {
                state.insert(sym);
            }
        }
    }
}
