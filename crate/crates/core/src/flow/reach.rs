//! Reachability under constant folding of controlling expressions.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use crate::frontend::ast::*;
use crate::sema::TypedUnit;

use super::cfg::{BlockId, Cfg, EdgeKind};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Reachability {
    pub unreachable: BTreeSet<StmtId>,
    /// Controlling expressions that fold to a constant, with their value.
    pub constant_conditions: BTreeMap<StmtId, i128>,
    pub reachable_blocks: BTreeSet<BlockId>,
}

/// Value of a controlling expression when it is an integer constant
/// expression over literals, enumerators and const-qualified locals with
/// constant initializers. Calls, volatile reads and parameters never fold.
pub fn fold_condition(unit: &TypedUnit, cond: &Expr) -> Option<i128> {
    unit.const_value(cond, true).ok()
}

/// Statements unreachable from the entry once edges ruled out by constant
/// conditions are removed.
pub fn static_unreachable(cfg: &Cfg, unit: &TypedUnit, stmts: &HashMap<StmtId, &Stmt>) -> Reachability {
    let mut constant_conditions = BTreeMap::new();
    let mut infeasible = BTreeSet::new();
    for block in &cfg.blocks {
        let Some(&last) = block.stmts.last() else { continue };
        let Some(stmt) = stmts.get(&last) else { continue };
        let cond = match &stmt.kind {
            StmtKind::If { cond, .. }
            | StmtKind::While { cond, .. }
            | StmtKind::DoWhile { cond, .. }
            | StmtKind::Switch { cond, .. } => cond,
            StmtKind::For { cond: Some(cond), .. } => cond,
            _ => continue,
        };
        let Some(v) = fold_condition(unit, cond) else { continue };
        constant_conditions.insert(last, v);
        let edges: Vec<_> = cfg.successors(block.id).copied().collect();
        let has_case = edges.iter().any(|e| e.kind == EdgeKind::SwitchCase(Some(v as i64)));
        for e in edges {
            let dead = match e.kind {
                EdgeKind::BranchTrue => v == 0,
                EdgeKind::BranchFalse => v != 0,
                EdgeKind::SwitchCase(Some(c)) => c as i128 != v,
                EdgeKind::SwitchCase(None) => has_case,
                _ => false,
            };
            if dead {
                infeasible.insert(e);
            }
        }
    }
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::from([cfg.entry]);
    seen.insert(cfg.entry);
    while let Some(b) = queue.pop_front() {
        for e in cfg.successors(b) {
            if !infeasible.contains(e) && seen.insert(e.to) {
                queue.push_back(e.to);
            }
        }
    }
    let unreachable = cfg
        .blocks
        .iter()
        .filter(|b| !seen.contains(&b.id))
        .flat_map(|b| b.stmts.iter().copied())
        .collect();
    Reachability { unreachable, constant_conditions, reachable_blocks: seen }
}
