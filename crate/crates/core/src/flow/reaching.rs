//! Reaching definitions for tracked scalar variables.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::frontend::ast::{Expr, ExprId, StmtId};
use crate::sema::{ReachingDef, ReachingDefs, SymbolId, TypedUnit};

use super::cfg::{BlockId, Cfg};
use super::effects::Effect;

#[derive(Debug, Clone, Copy)]
pub struct Definition<'a> {
    pub sym: SymbolId,
    /// The stored value, or `None` for entry values, declarations without
    /// initializer and compound updates.
    pub value: Option<&'a Expr>,
}

#[derive(Debug, Clone, Default)]
pub struct Reaching<'a> {
    pub defs: Vec<Definition<'a>>,
    /// For each read of a tracked variable, the definitions reaching it.
    pub at_read: HashMap<ExprId, Vec<usize>>,
}

impl<'a> ReachingDefs<'a> for Reaching<'a> {
    fn defs_for(&self, read: &Expr) -> Option<Vec<ReachingDef<'a>>> {
        let ids = self.at_read.get(&read.id)?;
        Some(
            ids.iter()
                .map(|&i| match self.defs[i].value {
                    Some(v) => ReachingDef::Value(v),
                    None => ReachingDef::Opaque,
                })
                .collect(),
        )
    }
}

type Effects<'a> = HashMap<StmtId, Vec<Effect<'a>>>;

pub fn reaching_definitions<'a>(cfg: &Cfg, unit: &TypedUnit, effects: &Effects<'a>) -> Reaching<'a> {
    let mut defs: Vec<Definition<'a>> = Vec::new();
    // Entry definitions: one opaque definition per tracked variable.
    let mut entry = BTreeSet::new();
    if let Some(f) = unit.function_info(&cfg.function) {
        for &s in f.params.iter().chain(&f.locals) {
            if unit.symbol(s).is_tracked_scalar() {
                entry.insert(defs.len());
                defs.push(Definition { sym: s, value: None });
            }
        }
    }
    // One definition per store or declaration, in block order.
    let mut site_def: HashMap<(StmtId, usize), usize> = HashMap::new();
    for b in &cfg.blocks {
        for s in &b.stmts {
            for (i, e) in effects.get(s).map(Vec::as_slice).unwrap_or_default().iter().enumerate() {
                let d = match *e {
                    Effect::Def { sym, value, .. } if unit.symbol(sym).is_tracked_scalar() => Definition { sym, value },
                    Effect::Declare { sym } if unit.symbol(sym).is_tracked_scalar() => Definition { sym, value: None },
                    _ => continue,
                };
                site_def.insert((*s, i), defs.len());
                defs.push(d);
            }
        }
    }
    let mut outs: BTreeMap<BlockId, Option<BTreeSet<usize>>> = cfg.blocks.iter().map(|b| (b.id, None)).collect();
    let mut at_read: HashMap<ExprId, Vec<usize>> = HashMap::new();
    loop {
        let mut changed = false;
        at_read.clear();
        for b in &cfg.blocks {
            let mut state = if b.id == cfg.entry { entry.clone() } else { BTreeSet::new() };
            for e in cfg.predecessors(b.id) {
                if let Some(o) = &outs[&e.from] {
                    state.extend(o.iter().copied());
                }
            }
            for s in &b.stmts {
                for (i, e) in effects.get(s).map(Vec::as_slice).unwrap_or_default().iter().enumerate() {
                    match *e {
                        Effect::Use { sym, expr } => {
                            if unit.symbol(sym).is_tracked_scalar() {
                                let r: Vec<usize> = state.iter().copied().filter(|&d| defs[d].sym == sym).collect();
                                at_read.entry(expr.id).or_default().extend(r);
                            }
                        }
                        Effect::Def { sym, .. } | Effect::Declare { sym } if site_def.contains_key(&(*s, i)) => {
                            if !matches!(e, Effect::Def { killing: false, .. }) {
                                state.retain(|&d| defs[d].sym != sym);
                            }
                            state.insert(site_def[&(*s, i)]);
                        }
                        _ => {}
                    }
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
    for v in at_read.values_mut() {
        v.sort_unstable();
        v.dedup();
    }
    Reaching { defs, at_read }
}
