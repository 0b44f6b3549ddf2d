//! Direct call graph of the unit's functions and its cycles.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::frontend::ast::*;
use crate::frontend::SourceSpan;
use crate::sema::{Storage, TypedUnit};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct CallSite {
    pub caller: String,
    pub callee: String,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CallGraph {
    /// Functions defined or declared by the unit (library functions excluded).
    pub nodes: BTreeSet<String>,
    pub edges: BTreeMap<String, BTreeSet<String>>,
    pub sites: Vec<CallSite>,
    /// Calls through pointers: `(caller, span)`.
    pub indirect_sites: Vec<(String, SourceSpan)>,
    /// Functions whose address is taken anywhere in the unit.
    pub address_taken: BTreeSet<String>,
    /// Strongly connected components that contain a cycle, each sorted.
    pub cycles: Vec<Vec<String>>,
}

impl CallGraph {
    pub fn callees(&self, f: &str) -> impl Iterator<Item = &String> {
        self.edges.get(f).into_iter().flatten()
    }

    /// Functions reachable from `roots` through direct calls.
    pub fn reachable_from<'a>(&self, roots: impl IntoIterator<Item = &'a str>) -> BTreeSet<String> {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<String> = roots.into_iter().map(str::to_string).collect();
        while let Some(f) = stack.pop() {
            if seen.insert(f.clone()) {
                stack.extend(self.callees(&f).cloned());
            }
        }
        seen
    }

    pub fn in_cycle(&self, f: &str) -> Option<&[String]> {
        self.cycles.iter().find(|c| c.iter().any(|n| n == f)).map(Vec::as_slice)
    }
}

fn function_name<'a>(unit: &TypedUnit, e: &'a Expr) -> Option<&'a str> {
    let s = unit.symbol_of(e)?;
    (s.storage == Storage::Function && !s.builtin).then(|| e.as_ident()).flatten()
}

/// Name of the function directly designated by a callee expression:
/// `f`, `(*f)` or `(&f)` where `f` names a function.
fn direct_target<'a>(unit: &TypedUnit, callee: &'a Expr) -> Option<&'a Expr> {
    match &callee.kind {
        ExprKind::Ident(_) => Some(callee),
        ExprKind::Unary { op: UnaryOp::Deref | UnaryOp::AddrOf, operand } => direct_target(unit, operand),
        _ => None,
    }
    .filter(|e| unit.symbol_of(e).is_some_and(|s| s.storage == Storage::Function))
}

pub fn build_call_graph(unit: &TypedUnit) -> CallGraph {
    let mut g = CallGraph::default();
    for s in &unit.symbols {
        if s.storage == Storage::Function && !s.builtin {
            g.nodes.insert(s.name.clone());
        }
    }
    // Identifiers naming a function in direct-callee position are not
    // address-taking; collect those first.
    let mut callee_idents = BTreeSet::new();
    let mut visit = |caller: Option<&str>, e: &Expr, g: &mut CallGraph| {
        e.walk(&mut |x| {
            if let ExprKind::Call { callee, .. } = &x.kind {
                match direct_target(unit, callee) {
                    Some(t) => {
                        callee_idents.insert(t.id);
                        if let (Some(caller), Some(name)) = (caller, function_name(unit, t)) {
                            g.edges.entry(caller.to_string()).or_default().insert(name.to_string());
                            g.sites.push(CallSite { caller: caller.to_string(), callee: name.to_string(), span: x.span });
                        }
                    }
                    None => {
                        if let Some(caller) = caller {
                            g.indirect_sites.push((caller.to_string(), x.span));
                        }
                    }
                }
            }
        });
    };
    let mut all: Vec<(Option<String>, &Expr)> = Vec::new();
    for d in &unit.ast.items {
        match d {
            ExternalDecl::Function(f) => {
                f.body.walk(&mut |s| {
                    for e in s.own_exprs() {
                        all.push((Some(f.name().to_string()), e));
                    }
                });
            }
            ExternalDecl::Declaration(decl) => visit_declaration_exprs(decl, &mut |e| all.push((None, e))),
        }
    }
    for (caller, e) in &all {
        visit(caller.as_deref(), e, &mut g);
    }
    for (_, e) in &all {
        e.walk(&mut |x| {
            if !callee_idents.contains(&x.id) {
                if let Some(name) = function_name(unit, x) {
                    g.address_taken.insert(name.to_string());
                }
            }
        });
    }
    g.cycles = cycles(&g);
    g
}

/// Tarjan's algorithm; keeps components with more than one node or a
/// self-edge.
fn cycles(g: &CallGraph) -> Vec<Vec<String>> {
    struct State<'a> {
        g: &'a CallGraph,
        index: BTreeMap<&'a str, usize>,
        low: BTreeMap<&'a str, usize>,
        stack: Vec<&'a str>,
        on_stack: BTreeSet<&'a str>,
        next: usize,
        out: Vec<Vec<String>>,
    }
    fn strong<'a>(st: &mut State<'a>, v: &'a str) {
        st.index.insert(v, st.next);
        st.low.insert(v, st.next);
        st.next += 1;
        st.stack.push(v);
        st.on_stack.insert(v);
        for w in st.g.callees(v) {
            let w = w.as_str();
            if !st.index.contains_key(w) {
                strong(st, w);
                let l = st.low[w].min(st.low[v]);
                st.low.insert(v, l);
            } else if st.on_stack.contains(w) {
                let l = st.index[w].min(st.low[v]);
                st.low.insert(v, l);
            }
        }
        if st.low[v] == st.index[v] {
            let mut comp = Vec::new();
            while let Some(w) = st.stack.pop() {
                st.on_stack.remove(w);
                comp.push(w.to_string());
                if w == v {
                    break;
                }
            }
            let self_loop = st.g.callees(v).any(|c| c == v);
            if comp.len() > 1 || self_loop {
                comp.sort();
                st.out.push(comp);
            }
        }
    }
    let mut st = State {
        g,
        index: BTreeMap::new(),
        low: BTreeMap::new(),
        stack: Vec::new(),
        on_stack: BTreeSet::new(),
        next: 0,
        out: Vec::new(),
    };
    for n in &g.nodes {
        if !st.index.contains_key(n.as_str()) {
            strong(&mut st, n);
        }
    }
    st.out.sort();
    st.out
}
