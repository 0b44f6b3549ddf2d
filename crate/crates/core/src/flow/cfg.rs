//! Control-flow graphs over statement ids.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::Serialize;

use crate::frontend::ast::*;
use crate::sema::TypedUnit;

use super::FlowError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct BlockId(pub u32);

impl BlockId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum EdgeKind {
    Fallthrough,
    BranchTrue,
    BranchFalse,
    /// `None` is the default edge.
    SwitchCase(Option<i64>),
    LoopBack,
    Goto,
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeKind::Fallthrough => f.write_str("fallthrough"),
            EdgeKind::BranchTrue => f.write_str("branch-true"),
            EdgeKind::BranchFalse => f.write_str("branch-false"),
            EdgeKind::SwitchCase(Some(v)) => write!(f, "switch-case {v}"),
            EdgeKind::SwitchCase(None) => f.write_str("switch-default"),
            EdgeKind::LoopBack => f.write_str("loop-back"),
            EdgeKind::Goto => f.write_str("goto"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Edge {
    pub from: BlockId,
    pub to: BlockId,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasicBlock {
    pub id: BlockId,
    /// Executable statements in execution order. A statement with a
    /// controlling expression stands for the evaluation of that expression
    /// and always ends its block.
    pub stmts: Vec<StmtId>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cfg {
    pub function: String,
    pub blocks: Vec<BasicBlock>,
    pub entry: BlockId,
    pub exit: BlockId,
    pub edges: Vec<Edge>,
}

impl Cfg {
    pub fn successors(&self, b: BlockId) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.from == b)
    }

    pub fn predecessors(&self, b: BlockId) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.to == b)
    }

    pub fn block_of(&self, s: StmtId) -> Option<BlockId> {
        self.blocks.iter().find(|b| b.stmts.contains(&s)).map(|b| b.id)
    }

    pub fn all_stmts(&self) -> impl Iterator<Item = StmtId> + '_ {
        self.blocks.iter().flat_map(|b| b.stmts.iter().copied())
    }

    /// `block N: [ids] -> successors(kind)` lines, one per block.
    pub fn dump(&self) -> String {
        let mut out = format!("function {}:\n", self.function);
        for b in &self.blocks {
            let ids: Vec<String> = b.stmts.iter().map(|s| s.to_string()).collect();
            let succ: Vec<String> = self.successors(b.id).map(|e| format!("{}({})", e.to.0, e.kind)).collect();
            let tag = if b.id == self.entry {
                " entry"
            } else if b.id == self.exit {
                " exit"
            } else {
                ""
            };
            out.push_str(&format!("block {}{}: [{}] -> {}\n", b.id.0, tag, ids.join(", "), succ.join(", ")));
        }
        out
    }
}

struct Loop {
    brk: usize,
    cont: Option<(usize, EdgeKind)>,
}

struct Builder<'a> {
    unit: &'a TypedUnit,
    blocks: Vec<Vec<StmtId>>,
    edges: Vec<(usize, usize, EdgeKind)>,
    cur: Option<usize>,
    exit: usize,
    labels: HashMap<String, usize>,
    defined_labels: HashMap<String, bool>,
    gotos: Vec<(String, crate::frontend::SourceSpan)>,
    targets: Vec<Loop>,
    switches: Vec<(usize, Vec<Option<i64>>)>,
    /// Blocks removed by `finish`.
    dead: Vec<usize>,
}

/// Lower a function body to a CFG.
pub fn build_cfg(unit: &TypedUnit, func: &FunctionDef) -> Result<Cfg, FlowError> {
    let mut b = Builder {
        unit,
        blocks: vec![Vec::new(), Vec::new()],
        edges: Vec::new(),
        cur: Some(0),
        exit: 1,
        labels: HashMap::new(),
        defined_labels: HashMap::new(),
        gotos: Vec::new(),
        targets: Vec::new(),
        switches: Vec::new(),
        dead: Vec::new(),
    };
    b.stmt(&func.body)?;
    if let Some(c) = b.cur {
        b.edge(c, b.exit, EdgeKind::Fallthrough);
    }
    for (l, span) in &b.gotos {
        if !b.defined_labels.contains_key(l) {
            return Err(FlowError::new(*span, format!("use of undeclared label '{l}'")));
        }
    }
    Ok(b.finish(func.name().to_string()))
}

impl Builder<'_> {
    fn new_block(&mut self) -> usize {
        self.blocks.push(Vec::new());
        self.blocks.len() - 1
    }

    fn edge(&mut self, from: usize, to: usize, kind: EdgeKind) {
        self.edges.push((from, to, kind));
    }

    fn add(&mut self, s: StmtId) {
        let c = match self.cur {
            Some(c) => c,
            None => {
                let n = self.new_block();
                self.cur = Some(n);
                n
            }
        };
        self.blocks[c].push(s);
    }

    /// Continue in `b`, falling through from the current block if any.
    fn start(&mut self, b: usize) {
        if let Some(c) = self.cur {
            if c != b {
                self.edge(c, b, EdgeKind::Fallthrough);
            }
        }
        self.cur = Some(b);
    }

    /// The block that holds the statement just added.
    fn here(&self) -> usize {
        self.cur.expect("current block")
    }

    fn label_block(&mut self, name: &str) -> usize {
        if let Some(&b) = self.labels.get(name) {
            return b;
        }
        let b = self.new_block();
        self.labels.insert(name.to_string(), b);
        b
    }

    fn stmt(&mut self, s: &Stmt) -> Result<(), FlowError> {
        match &s.kind {
            StmtKind::Compound(items) => {
                for i in items {
                    self.stmt(i)?;
                }
            }
            StmtKind::Decl(_) | StmtKind::Expr(Some(_)) => self.add(s.id),
            StmtKind::Expr(None) => {}
            StmtKind::If { then, els, .. } => {
                self.add(s.id);
                let c = self.here();
                let then_b = self.new_block();
                let join = self.new_block();
                let else_b = if els.is_some() { self.new_block() } else { join };
                self.edge(c, then_b, EdgeKind::BranchTrue);
                self.edge(c, else_b, EdgeKind::BranchFalse);
                self.cur = Some(then_b);
                self.stmt(then)?;
                if let Some(e) = els {
                    if let Some(t) = self.cur {
                        self.edge(t, join, EdgeKind::Fallthrough);
                    }
                    self.cur = Some(else_b);
                    self.stmt(e)?;
                }
                self.start(join);
            }
            StmtKind::While { body, .. } => {
                let header = self.new_block();
                self.start(header);
                self.add(s.id);
                let body_b = self.new_block();
                let exit_b = self.new_block();
                self.edge(header, body_b, EdgeKind::BranchTrue);
                self.edge(header, exit_b, EdgeKind::BranchFalse);
                self.targets.push(Loop { brk: exit_b, cont: Some((header, EdgeKind::LoopBack)) });
                self.cur = Some(body_b);
                self.stmt(body)?;
                self.targets.pop();
                if let Some(c) = self.cur {
                    self.edge(c, header, EdgeKind::LoopBack);
                }
                self.cur = Some(exit_b);
            }
            StmtKind::DoWhile { body, .. } => {
                let body_b = self.new_block();
                self.start(body_b);
                let cond_b = self.new_block();
                let exit_b = self.new_block();
                self.targets.push(Loop { brk: exit_b, cont: Some((cond_b, EdgeKind::Fallthrough)) });
                self.stmt(body)?;
                self.targets.pop();
                self.start(cond_b);
                self.add(s.id);
                self.edge(cond_b, body_b, EdgeKind::BranchTrue);
                self.edge(cond_b, exit_b, EdgeKind::BranchFalse);
                self.cur = Some(exit_b);
            }
            StmtKind::For { init, cond, step, body } => {
                if let Some(i) = init {
                    self.stmt(i)?;
                }
                let header = self.new_block();
                self.start(header);
                self.add(s.id);
                let body_b = self.new_block();
                let exit_b = self.new_block();
                let step_b = self.new_block();
                if cond.is_some() {
                    self.edge(header, body_b, EdgeKind::BranchTrue);
                    self.edge(header, exit_b, EdgeKind::BranchFalse);
                } else {
                    self.edge(header, body_b, EdgeKind::Fallthrough);
                }
                self.targets.push(Loop { brk: exit_b, cont: Some((step_b, EdgeKind::Fallthrough)) });
                self.cur = Some(body_b);
                self.stmt(body)?;
                self.targets.pop();
                self.start(step_b);
                if let Some(st) = step {
                    self.stmt(st)?;
                }
                if let Some(c) = self.cur {
                    self.edge(c, header, EdgeKind::LoopBack);
                }
                self.cur = Some(exit_b);
            }
            StmtKind::Switch { body, .. } => {
                self.add(s.id);
                let sw = self.here();
                let exit_b = self.new_block();
                self.targets.push(Loop { brk: exit_b, cont: None });
                self.switches.push((sw, Vec::new()));
                self.cur = None;
                self.stmt(body)?;
                self.targets.pop();
                let (_, labels) = self.switches.pop().expect("switch");
                if !labels.contains(&None) {
                    self.edge(sw, exit_b, EdgeKind::SwitchCase(None));
                }
                self.start(exit_b);
            }
            StmtKind::Case { value, body } => {
                let v = self.unit.const_value(value, false).ok().map(|v| v as i64);
                let Some((sw, labels)) = self.switches.last_mut() else {
                    return Err(FlowError::new(s.span, "case label not within a switch statement"));
                };
                if labels.contains(&v) {
                    return Err(FlowError::new(s.span, "duplicate case value"));
                }
                labels.push(v);
                let sw = *sw;
                let b = self.new_block();
                self.start(b);
                self.edge(sw, b, EdgeKind::SwitchCase(v));
                self.stmt(body)?;
            }
            StmtKind::Default { body } => {
                let Some((sw, labels)) = self.switches.last_mut() else {
                    return Err(FlowError::new(s.span, "default label not within a switch statement"));
                };
                if labels.contains(&None) {
                    return Err(FlowError::new(s.span, "multiple default labels in one switch"));
                }
                labels.push(None);
                let sw = *sw;
                let b = self.new_block();
                self.start(b);
                self.edge(sw, b, EdgeKind::SwitchCase(None));
                self.stmt(body)?;
            }
            StmtKind::Labeled { label, body } => {
                if self.defined_labels.insert(label.name.clone(), true).is_some() {
                    return Err(FlowError::new(label.span, format!("redefinition of label '{}'", label.name)));
                }
                let b = self.label_block(&label.name);
                self.start(b);
                self.stmt(body)?;
            }
            StmtKind::Goto(label) => {
                self.add(s.id);
                let c = self.here();
                let b = self.label_block(&label.name);
                self.gotos.push((label.name.clone(), label.span));
                self.edge(c, b, EdgeKind::Goto);
                self.cur = None;
            }
            StmtKind::Return(_) => {
                self.add(s.id);
                let c = self.here();
                self.edge(c, self.exit, EdgeKind::Fallthrough);
                self.cur = None;
            }
            StmtKind::Break => {
                let Some(t) = self.targets.last() else {
                    return Err(FlowError::new(s.span, "'break' statement not in loop or switch statement"));
                };
                let brk = t.brk;
                self.add(s.id);
                let c = self.here();
                self.edge(c, brk, EdgeKind::Fallthrough);
                self.cur = None;
            }
            StmtKind::Continue => {
                let Some((to, kind)) = self.targets.iter().rev().find_map(|t| t.cont) else {
                    return Err(FlowError::new(s.span, "'continue' statement not in loop statement"));
                };
                self.add(s.id);
                let c = self.here();
                self.edge(c, to, kind);
                self.cur = None;
            }
        }
        Ok(())
    }

    /// Remove empty pass-through blocks, merge straight-line chains, and
    /// renumber with the entry first and the exit last.
    fn finish(mut self, function: String) -> Cfg {
        let entry = 0usize;
        let exit = self.exit;
        // Bypass empty blocks with a single fallthrough successor.
        loop {
            let mut changed = false;
            for b in 0..self.blocks.len() {
                if b == entry || b == exit || !self.blocks[b].is_empty() || !self.alive(b) {
                    continue;
                }
                let succs: Vec<(usize, EdgeKind)> =
                    self.edges.iter().filter(|e| e.0 == b).map(|e| (e.1, e.2)).collect();
                if succs.len() != 1 || succs[0].0 == b || succs[0].1 != EdgeKind::Fallthrough {
                    continue;
                }
                let to = succs[0].0;
                self.edges.retain(|e| e.0 != b);
                for e in self.edges.iter_mut() {
                    if e.1 == b {
                        e.1 = to;
                    }
                }
                self.blocks[b].clear();
                self.dead_mark(b);
                changed = true;
            }
            // Merge a block into its unique fallthrough predecessor.
            for b in 0..self.blocks.len() {
                if b == entry || b == exit || !self.alive(b) {
                    continue;
                }
                let preds: Vec<(usize, usize, EdgeKind)> = self.edges.iter().filter(|e| e.1 == b).copied().collect();
                if preds.len() != 1 || preds[0].2 != EdgeKind::Fallthrough || preds[0].0 == b {
                    continue;
                }
                let p = preds[0].0;
                if self.edges.iter().filter(|e| e.0 == p).count() != 1 {
                    continue;
                }
                let moved = std::mem::take(&mut self.blocks[b]);
                self.blocks[p].extend(moved);
                self.edges.retain(|e| !(e.0 == p && e.1 == b));
                for e in self.edges.iter_mut() {
                    if e.0 == b {
                        e.0 = p;
                    }
                }
                self.dead_mark(b);
                changed = true;
            }
            if !changed {
                break;
            }
        }
        // Drop blocks that are empty and disconnected.
        let keep: Vec<usize> = (0..self.blocks.len())
            .filter(|&b| {
                b == entry
                    || b == exit
                    || (self.alive(b)
                        && (!self.blocks[b].is_empty() || self.edges.iter().any(|e| e.0 == b || e.1 == b)))
            })
            .filter(|&b| b != exit)
            .chain(std::iter::once(exit))
            .collect();
        let remap: BTreeMap<usize, u32> = keep.iter().enumerate().map(|(i, &b)| (b, i as u32)).collect();
        let blocks = keep
            .iter()
            .map(|&b| BasicBlock { id: BlockId(remap[&b]), stmts: std::mem::take(&mut self.blocks[b]) })
            .collect();
        let mut edges: Vec<Edge> = self
            .edges
            .iter()
            .filter(|e| remap.contains_key(&e.0) && remap.contains_key(&e.1))
            .map(|e| Edge { from: BlockId(remap[&e.0]), to: BlockId(remap[&e.1]), kind: e.2 })
            .collect();
        edges.dedup();
        Cfg { function, blocks, entry: BlockId(remap[&entry]), exit: BlockId(remap[&exit]), edges }
    }

    fn alive(&self, b: usize) -> bool {
        !self.dead.contains(&b)
    }

    fn dead_mark(&mut self, b: usize) {
        self.dead.push(b);
    }
}
