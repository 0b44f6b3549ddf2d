//! Intraprocedural flow analyses: control-flow graphs, reachability,
//! liveness, definite assignment, reaching definitions, and the call graph.

pub mod callgraph;
pub mod cfg;
pub mod definite;
pub mod effects;
pub mod liveness;
pub mod reach;
pub mod reaching;

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::frontend::ast::{Stmt, StmtId};
use crate::frontend::SourceSpan;
use crate::sema::TypedUnit;

pub use callgraph::{build_call_graph, CallGraph, CallSite};
pub use cfg::{build_cfg, BasicBlock, BlockId, Cfg, Edge, EdgeKind};
pub use definite::{definite_assignment, DefiniteAssignment, UninitRead};
pub use effects::{stmt_effects, Effect, StoreSite};
pub use liveness::{liveness_dead_stores, DeadStore, Liveness};
pub use reach::{fold_condition, static_unreachable, Reachability};
pub use reaching::{reaching_definitions, Definition, Reaching};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{span}: {message}")]
pub struct FlowError {
    pub span: SourceSpan,
    pub message: String,
}

impl FlowError {
    pub fn new(span: SourceSpan, message: impl Into<String>) -> Self {
        FlowError { span, message: message.into() }
    }
}

/// Everything the checks need to know about one function body.
#[derive(Debug, Clone)]
pub struct FunctionFacts<'a> {
    pub cfg: Cfg,
    pub stmts: HashMap<StmtId, &'a Stmt>,
    pub effects: HashMap<StmtId, Vec<Effect<'a>>>,
    pub reach: Reachability,
    pub liveness: Liveness,
    pub definite: DefiniteAssignment,
    pub reaching: Reaching<'a>,
}

#[derive(Debug, Clone)]
pub struct FlowFacts<'a> {
    pub functions: BTreeMap<String, FunctionFacts<'a>>,
    pub call_graph: CallGraph,
}

/// Every statement in `body`, keyed by id.
pub fn stmt_index(body: &Stmt) -> HashMap<StmtId, &Stmt> {
    let mut m = HashMap::new();
    body.walk(&mut |s| {
        m.insert(s.id, s);
    });
    m
}

pub fn analyze_function<'a>(unit: &'a TypedUnit, name: &str) -> Result<FunctionFacts<'a>, FlowError> {
    let func = unit
        .ast
        .function(name)
        .ok_or_else(|| FlowError::new(SourceSpan::new(unit.pre.main_file, 1, 1, 0), format!("no function named '{name}'")))?;
    let cfg = build_cfg(unit, func)?;
    let stmts = stmt_index(&func.body);
    let effects: HashMap<StmtId, Vec<Effect<'a>>> = stmts
        .values()
        .filter(|s| s.is_executable())
        .map(|s| (s.id, stmt_effects(unit, s)))
        .collect();
    let reach = static_unreachable(&cfg, unit, &stmts);
    let liveness = liveness_dead_stores(&cfg, unit, &effects);
    let definite = definite_assignment(&cfg, unit, &effects);
    let reaching = reaching_definitions(&cfg, unit, &effects);
    Ok(FunctionFacts { cfg, stmts, effects, reach, liveness, definite, reaching })
}

pub fn analyze(unit: &TypedUnit) -> Result<FlowFacts<'_>, FlowError> {
    let mut functions = BTreeMap::new();
    for f in unit.ast.functions() {
        functions.insert(f.name().to_string(), analyze_function(unit, f.name())?);
    }
    Ok(FlowFacts { functions, call_graph: build_call_graph(unit) })
}

#[cfg(test)]
mod tests;
