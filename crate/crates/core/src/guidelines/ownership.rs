//! R22.1: resources obtained from the library must be released. An
//! intraprocedural ownership automaton runs per local pointer variable over
//! the CFG; a path that reaches the exit still owning a resource, a merge
//! of owning and released paths, a double release and a release by the
//! wrong function are all definite findings.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::flow::{BlockId, EdgeKind, FunctionFacts};
use crate::frontend::ast::{Expr, ExprId, ExprKind, FunctionDef, Initializer, Stmt, StmtKind, UnaryOp};
use crate::frontend::{MacroOrigin, SourceSpan};
use crate::sema::{LibcTag, Storage, SymbolId};

use super::{strip_casts, CheckContext, Diagnostic, Profile, Relation, Verdict, STREAM_OWNERSHIP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Kind {
    Stream,
    Memory,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum St {
    Unowned,
    Owned(usize),
    Released(usize),
    Escaped,
}

/// Absent symbols are `{Unowned}`.
type State = BTreeMap<SymbolId, BTreeSet<St>>;

struct Site {
    span: SourceSpan,
    origin: MacroOrigin,
    kind: Kind,
    function: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Problem {
    Leak(usize),
    Partial(usize),
    Escape(usize),
    Discarded(usize),
    DoubleRelease(SourceSpanKey, usize),
    Mismatch(SourceSpanKey, usize),
}

type SourceSpanKey = (u32, u32, u32, u32);

fn key(s: SourceSpan) -> SourceSpanKey {
    (s.file.0, s.line, s.column, s.length)
}

#[derive(Clone, Copy)]
enum Val {
    Fresh(usize),
    Handle(SymbolId),
    Other,
}

struct Machine<'c, 'u> {
    ctx: &'c CheckContext<'u>,
    sites: Vec<Site>,
    site_of: HashMap<ExprId, usize>,
    problems: BTreeSet<Problem>,
    spans: HashMap<SourceSpanKey, (SourceSpan, MacroOrigin)>,
}

fn states(state: &State, h: SymbolId) -> BTreeSet<St> {
    state.get(&h).cloned().unwrap_or_else(|| BTreeSet::from([St::Unowned]))
}

impl Machine<'_, '_> {
    fn handle(&self, e: &Expr) -> Option<SymbolId> {
        if !matches!(e.kind, ExprKind::Ident(_)) {
            return None;
        }
        let s = self.ctx.unit.symbol_of(e)?;
        (s.storage == Storage::Automatic && s.ty.is_pointer()).then_some(s.id)
    }

    fn escape_handle(&mut self, state: &mut State, h: SymbolId) {
        let mut next = BTreeSet::new();
        for st in states(state, h) {
            match st {
                St::Owned(s) => {
                    self.problems.insert(Problem::Escape(s));
                    next.insert(St::Escaped);
                }
                other => {
                    next.insert(other);
                }
            }
        }
        state.insert(h, next);
    }

    fn consume(&mut self, state: &mut State, v: Val) {
        match v {
            Val::Fresh(s) => {
                self.problems.insert(Problem::Escape(s));
            }
            Val::Handle(h) => self.escape_handle(state, h),
            Val::Other => {}
        }
    }

    fn discard(&mut self, v: Val) {
        if let Val::Fresh(s) = v {
            self.problems.insert(Problem::Discarded(s));
        }
    }

    fn overwrite(&mut self, state: &mut State, h: SymbolId, value: BTreeSet<St>) {
        for st in states(state, h) {
            if let St::Owned(s) = st {
                self.problems.insert(Problem::Leak(s));
            }
        }
        state.insert(h, value);
    }

    fn release(&mut self, state: &mut State, h: SymbolId, kind: Option<Kind>, at: &Expr) {
        let k = key(at.span);
        self.spans.insert(k, (at.span, at.origin.clone()));
        let mut next = BTreeSet::new();
        for st in states(state, h) {
            match st {
                St::Owned(s) => {
                    if kind.is_some_and(|k2| k2 != self.sites[s].kind) {
                        self.problems.insert(Problem::Mismatch(k, s));
                    }
                    next.insert(St::Released(s));
                }
                St::Released(s) => {
                    if kind.is_some() {
                        self.problems.insert(Problem::DoubleRelease(k, s));
                    }
                    next.insert(St::Released(s));
                }
                other => {
                    next.insert(other);
                }
            }
        }
        state.insert(h, next);
    }

    fn eval(&mut self, state: &mut State, e: &Expr) -> Val {
        let unit = self.ctx.unit;
        match &e.kind {
            ExprKind::Cast { expr, .. } => self.eval(state, expr),
            ExprKind::Ident(_) => self.handle(e).map_or(Val::Other, Val::Handle),
            ExprKind::Assign { op: None, lhs, rhs } => {
                let v = self.eval(state, rhs);
                match self.handle(lhs) {
                    Some(h) => {
                        let value = match v {
                            Val::Fresh(s) => BTreeSet::from([St::Owned(s)]),
                            Val::Handle(h2) if h2 == h => states(state, h),
                            Val::Handle(h2) => {
                                self.escape_handle(state, h2);
                                BTreeSet::from([St::Unowned])
                            }
                            Val::Other => BTreeSet::from([St::Unowned]),
                        };
                        if !matches!(v, Val::Handle(h2) if h2 == h) {
                            self.overwrite(state, h, value);
                        }
                        Val::Handle(h)
                    }
                    None => {
                        let lv = self.eval(state, lhs);
                        let _ = lv;
                        self.consume(state, v);
                        Val::Other
                    }
                }
            }
            ExprKind::Call { callee, args } => {
                self.eval(state, callee);
                let tag = unit.callee_tag(e);
                let name = unit.direct_callee(e).map(|s| s.name.clone()).unwrap_or_default();
                let builtin = unit.direct_callee(e).is_some_and(|s| s.builtin);
                let release = match tag {
                    Some(LibcTag::StreamRelease) => Some(Kind::Stream),
                    Some(LibcTag::MemoryRelease) => Some(Kind::Memory),
                    _ => None,
                };
                for (i, a) in args.iter().enumerate() {
                    let v = self.eval(state, a);
                    match v {
                        Val::Handle(h) if release.is_some() && i == 0 => self.release(state, h, release, e),
                        Val::Handle(h) if name == "realloc" && i == 0 => self.release(state, h, None, e),
                        Val::Handle(_) if builtin => {}
                        Val::Fresh(_) if release.is_some() => {}
                        v => self.consume(state, v),
                    }
                }
                let kind = match tag {
                    Some(LibcTag::StreamAcquire) => Kind::Stream,
                    Some(LibcTag::MemoryAcquire) => Kind::Memory,
                    _ => return Val::Other,
                };
                let s = *self.site_of.entry(e.id).or_insert_with(|| {
                    self.sites.push(Site { span: e.span, origin: e.origin.clone(), kind, function: name.clone() });
                    self.sites.len() - 1
                });
                Val::Fresh(s)
            }
            ExprKind::Unary { op: UnaryOp::AddrOf, operand } => {
                if let Some(h) = self.handle(operand) {
                    self.escape_handle(state, h);
                } else {
                    self.eval(state, operand);
                }
                Val::Other
            }
            ExprKind::Comma { lhs, rhs } => {
                let v = self.eval(state, lhs);
                self.discard(v);
                self.eval(state, rhs)
            }
            ExprKind::SizeofExpr(_) | ExprKind::SizeofType(_) => Val::Other,
            ExprKind::Conditional { cond, then, els } => {
                self.eval(state, cond);
                for arm in [then, els] {
                    let v = self.eval(state, arm);
                    self.consume(state, v);
                }
                Val::Other
            }
            _ => {
                for c in e.children() {
                    let v = self.eval(state, c);
                    if let Val::Fresh(s) = v {
                        self.problems.insert(Problem::Escape(s));
                    }
                }
                Val::Other
            }
        }
    }

    fn stmt(&mut self, state: &mut State, s: &Stmt) {
        match &s.kind {
            StmtKind::Decl(d) => {
                for i in &d.declarators {
                    let Some(sym) = self.ctx.unit.declarator_symbol(i.declarator.id) else { continue };
                    let is_handle = {
                        let sy = self.ctx.unit.symbol(sym);
                        sy.storage == Storage::Automatic && sy.ty.is_pointer()
                    };
                    match &i.init {
                        Some(Initializer::Expr(e)) => {
                            let v = self.eval(state, e);
                            if is_handle {
                                let value = match v {
                                    Val::Fresh(site) => BTreeSet::from([St::Owned(site)]),
                                    other => {
                                        self.consume(state, other);
                                        BTreeSet::from([St::Unowned])
                                    }
                                };
                                state.insert(sym, value);
                            } else {
                                self.consume(state, v);
                            }
                        }
                        Some(Initializer::List { .. }) => {
                            for e in i.init.as_ref().unwrap().exprs() {
                                let v = self.eval(state, e);
                                self.consume(state, v);
                            }
                        }
                        None => {
                            state.remove(&sym);
                        }
                    }
                }
            }
            StmtKind::Expr(Some(e)) => {
                let v = self.eval(state, e);
                self.discard(v);
            }
            StmtKind::Return(Some(e)) => {
                let v = self.eval(state, strip_casts(e));
                self.consume(state, v);
            }
            _ => {
                for e in s.own_exprs() {
                    let v = self.eval(state, e);
                    if let Val::Fresh(site) = v {
                        self.problems.insert(Problem::Discarded(site));
                    }
                }
            }
        }
    }

    fn is_null(&self, e: &Expr) -> bool {
        let e = strip_casts(e);
        self.ctx.unit.const_value(e, false) == Ok(0)
    }

    /// The handle a condition tests and whether a true outcome means null.
    fn null_test(&self, cond: &Expr) -> Option<(SymbolId, bool)> {
        let target = |e: &Expr| -> Option<SymbolId> {
            let e = strip_casts(e);
            match &e.kind {
                ExprKind::Assign { op: None, lhs, .. } => self.handle(lhs),
                _ => self.handle(e),
            }
        };
        let cond = strip_casts(cond);
        match &cond.kind {
            ExprKind::Unary { op: UnaryOp::Not, operand } => self.null_test(operand).map(|(h, n)| (h, !n)),
            ExprKind::Binary { op, lhs, rhs } if matches!(op, crate::frontend::ast::BinaryOp::Eq | crate::frontend::ast::BinaryOp::Ne) => {
                let eq = *op == crate::frontend::ast::BinaryOp::Eq;
                if self.is_null(rhs) {
                    target(lhs).map(|h| (h, eq))
                } else if self.is_null(lhs) {
                    target(rhs).map(|h| (h, eq))
                } else {
                    None
                }
            }
            _ => target(cond).map(|h| (h, false)),
        }
    }

    fn refine(&self, state: &mut State, cond: &Expr, edge: EdgeKind) {
        let Some((h, true_means_null)) = self.null_test(cond) else { return };
        let null = match edge {
            EdgeKind::BranchTrue => true_means_null,
            EdgeKind::BranchFalse => !true_means_null,
            _ => return,
        };
        if null {
            let next = states(state, h).into_iter().map(|s| if let St::Owned(_) = s { St::Unowned } else { s }).collect();
            state.insert(h, next);
        }
    }
}

fn controlling_expr(s: &Stmt) -> Option<&Expr> {
    match &s.kind {
        StmtKind::If { cond, .. } | StmtKind::While { cond, .. } | StmtKind::DoWhile { cond, .. } => Some(cond),
        StmtKind::For { cond, .. } => cond.as_ref(),
        _ => None,
    }
}

fn join(into: &mut State, from: &State) {
    let keys: BTreeSet<SymbolId> = into.keys().chain(from.keys()).copied().collect();
    for k in keys {
        let mut s = states(into, k);
        s.extend(states(from, k));
        into.insert(k, s);
    }
}

fn analyze(m: &mut Machine<'_, '_>, facts: &FunctionFacts<'_>) {
    let cfg = &facts.cfg;
    let mut ins: BTreeMap<BlockId, Option<State>> = cfg.blocks.iter().map(|b| (b.id, None)).collect();
    ins.insert(cfg.entry, Some(State::new()));
    let mut incoming: BTreeMap<BlockId, Vec<State>> = BTreeMap::new();
    let mut changed = true;
    while changed {
        changed = false;
        incoming.clear();
        for b in &cfg.blocks {
            let Some(mut state) = ins[&b.id].clone() else { continue };
            for s in &b.stmts {
                m.stmt(&mut state, facts.stmts[s]);
            }
            let cond = b.stmts.last().and_then(|s| controlling_expr(facts.stmts[s]));
            for e in cfg.successors(b.id) {
                let mut out = state.clone();
                if let Some(c) = cond {
                    m.refine(&mut out, c, e.kind);
                }
                incoming.entry(e.to).or_default().push(out.clone());
                let slot = ins.get_mut(&e.to).unwrap();
                let next = match slot {
                    Some(cur) => {
                        let mut j = cur.clone();
                        join(&mut j, &out);
                        j
                    }
                    None => out,
                };
                if slot.as_ref() != Some(&next) {
                    *slot = Some(next);
                    changed = true;
                }
            }
        }
    }
    for preds in incoming.values() {
        if preds.len() < 2 {
            continue;
        }
        let mut owned = BTreeSet::new();
        let mut released = BTreeSet::new();
        for p in preds {
            for set in p.values() {
                for st in set {
                    match st {
                        St::Owned(s) => {
                            owned.insert(*s);
                        }
                        St::Released(s) => {
                            released.insert(*s);
                        }
                        _ => {}
                    }
                }
            }
        }
        for s in owned.intersection(&released) {
            m.problems.insert(Problem::Partial(*s));
        }
    }
    if let Some(Some(exit)) = ins.get(&cfg.exit) {
        for set in exit.values() {
            for st in set {
                if let St::Owned(s) = st {
                    m.problems.insert(Problem::Leak(*s));
                }
            }
        }
    }
}

fn run(ctx: &CheckContext<'_>, f: &FunctionDef, out: &mut Vec<Diagnostic>) {
    let facts = ctx.facts(f);
    let mut m = Machine { ctx, sites: Vec::new(), site_of: HashMap::new(), problems: BTreeSet::new(), spans: HashMap::new() };
    analyze(&mut m, facts);
    let definite = Verdict::definite(Relation::OverApprox);
    let partial: BTreeSet<usize> = m.problems.iter().filter_map(|p| if let Problem::Partial(s) = p { Some(*s) } else { None }).collect();
    for p in &m.problems {
        let d = match *p {
            Problem::Leak(s) if !partial.contains(&s) => {
                let site = &m.sites[s];
                ctx.diag("R22.1", STREAM_OWNERSHIP, definite, site.span, site.origin.clone(), format!("resource from '{}' is not released on some path", site.function))
            }
            Problem::Leak(_) => continue,
            Problem::Partial(s) => {
                let site = &m.sites[s];
                ctx.diag("R22.1", STREAM_OWNERSHIP, definite, site.span, site.origin.clone(), format!("resource from '{}' is released on some paths only", site.function))
            }
            Problem::Discarded(s) => {
                let site = &m.sites[s];
                ctx.diag("R22.1", STREAM_OWNERSHIP, definite, site.span, site.origin.clone(), format!("resource from '{}' is discarded", site.function))
            }
            Problem::Escape(s) => {
                if ctx.profile != Profile::Strict {
                    continue;
                }
                let site = &m.sites[s];
                ctx.diag(
                    "R22.1",
                    STREAM_OWNERSHIP,
                    Verdict::possible(Relation::OverApprox),
                    site.span,
                    site.origin.clone(),
                    format!("resource from '{}' escapes local ownership tracking", site.function),
                )
            }
            Problem::DoubleRelease(k, s) => {
                let (span, origin) = m.spans[&k].clone();
                ctx.diag("R22.1", STREAM_OWNERSHIP, definite, span, origin, format!("resource from '{}' may be released twice", m.sites[s].function))
            }
            Problem::Mismatch(k, s) => {
                let (span, origin) = m.spans[&k].clone();
                ctx.diag("R22.1", STREAM_OWNERSHIP, definite, span, origin, format!("resource from '{}' is released by a function of another family", m.sites[s].function))
            }
        };
        out.push(d);
    }
}

pub(super) fn check(ctx: &CheckContext<'_>) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for f in ctx.unit.ast.functions() {
        run(ctx, f, &mut out);
    }
    out
}
