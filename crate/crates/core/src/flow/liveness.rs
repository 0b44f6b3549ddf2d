//! Backward liveness over tracked scalar variables and the dead stores it
//! implies.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::frontend::ast::StmtId;
use crate::sema::{SymbolId, TypedUnit};

use super::cfg::{BlockId, Cfg};
use super::effects::{Effect, StoreSite};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DeadStore {
    pub site: StoreSite,
    pub sym: SymbolId,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Liveness {
    pub live_in: BTreeMap<BlockId, BTreeSet<SymbolId>>,
    pub live_out: BTreeMap<BlockId, BTreeSet<SymbolId>>,
    /// Every individual store whose value is never read.
    pub dead_sites: Vec<DeadStore>,
    /// `(statement, symbol)` pairs where every store the statement makes to
    /// the symbol is dead.
    pub dead_stores: BTreeSet<(StmtId, SymbolId)>,
}

type Effects<'a> = HashMap<StmtId, Vec<Effect<'a>>>;

fn tracked(unit: &TypedUnit, sym: SymbolId) -> bool {
    unit.symbol(sym).is_tracked_scalar()
}

/// Walk a block backwards from `live`, calling `on_def` with each store and
/// whether its symbol is live just after it.
fn transfer(
    unit: &TypedUnit,
    stmts: &[StmtId],
    effects: &Effects<'_>,
    live: &mut BTreeSet<SymbolId>,
    on_def: &mut dyn FnMut(StoreSite, SymbolId, bool),
) {
    for s in stmts.iter().rev() {
        let Some(effs) = effects.get(s) else { continue };
        for e in effs.iter().rev() {
            match *e {
                Effect::Use { sym, .. } => {
                    if tracked(unit, sym) {
                        live.insert(sym);
                    }
                }
                Effect::Def { sym, site, killing, .. } => {
                    if tracked(unit, sym) {
                        on_def(site, sym, live.contains(&sym));
                        if killing {
                            live.remove(&sym);
                        }
                    }
                }
                Effect::Declare { sym } => {
                    live.remove(&sym);
                }
            }
        }
    }
}

pub fn liveness_dead_stores(cfg: &Cfg, unit: &TypedUnit, effects: &Effects<'_>) -> Liveness {
    let mut live_in: BTreeMap<BlockId, BTreeSet<SymbolId>> = cfg.blocks.iter().map(|b| (b.id, BTreeSet::new())).collect();
    let mut live_out = live_in.clone();
    loop {
        let mut changed = false;
        for b in cfg.blocks.iter().rev() {
            let mut out = BTreeSet::new();
            for e in cfg.successors(b.id) {
                out.extend(live_in[&e.to].iter().copied());
            }
            let mut live = out.clone();
            transfer(unit, &b.stmts, effects, &mut live, &mut |_, _, _| {});
            if live != live_in[&b.id] {
                live_in.insert(b.id, live);
                changed = true;
            }
            live_out.insert(b.id, out);
        }
        if !changed {
            break;
        }
    }
    let mut dead_sites = Vec::new();
    let mut any_live: BTreeSet<(StmtId, SymbolId)> = BTreeSet::new();
    for b in &cfg.blocks {
        let mut live = live_out[&b.id].clone();
        transfer(unit, &b.stmts, effects, &mut live, &mut |site, sym, is_live| {
            if is_live {
                any_live.insert((site.stmt, sym));
            } else {
                dead_sites.push(DeadStore { site, sym });
            }
        });
    }
    dead_sites.sort();
    let dead_stores = dead_sites
        .iter()
        .map(|d| (d.site.stmt, d.sym))
        .filter(|k| !any_live.contains(k))
        .collect();
    Liveness { live_in, live_out, dead_sites, dead_stores }
}
