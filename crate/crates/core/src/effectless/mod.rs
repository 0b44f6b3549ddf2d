//! Effectless operations: detection, classification as justified or not,
//! and reporting either under a directive that tolerates justified cases or
//! under a wholesale R2.2 ban.

pub mod ledger;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::Serialize;

use crate::flow::FlowFacts;
use crate::frontend::ast::*;
use crate::frontend::{MacroOrigin, SourceSpan};
use crate::guidelines::{Diagnostic, Relation, Verdict, EFFECTLESS};
use crate::sema::{Storage, SymbolId, TypedUnit};

pub use ledger::{same_file, JustificationLedger, LedgerEntry, LedgerError};

pub const DIRECTIVE_RULE: &str = "D-EFFECTLESS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperationKind {
    NoEffectExpressionStatement,
    NeutralOperandOperation,
    DeadStore,
    NoEffectCallCandidate,
}

impl fmt::Display for OperationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OperationKind::NoEffectExpressionStatement => "no-effect-expression-statement",
            OperationKind::NeutralOperandOperation => "neutral-operand-operation",
            OperationKind::DeadStore => "dead-store",
            OperationKind::NoEffectCallCandidate => "no-effect-call-candidate",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reason {
    MacroAbstraction,
    SizeofAbstraction,
    EnumSeries,
    LoopControl,
    ConfigFunction,
    LedgerEntry,
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Reason::MacroAbstraction => "macro-abstraction",
            Reason::SizeofAbstraction => "sizeof-abstraction",
            Reason::EnumSeries => "enum-series",
            Reason::LoopControl => "loop-control",
            Reason::ConfigFunction => "config-function",
            Reason::LedgerEntry => "ledger-entry",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Justified(Reason),
    Unjustified,
}

impl Classification {
    pub fn is_justified(self) -> bool {
        matches!(self, Classification::Justified(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Directive,
    StrictR22,
    Off,
}

/// A detector hit before classification.
#[derive(Debug, Clone)]
pub struct RawFinding<'a> {
    pub kind: OperationKind,
    pub span: SourceSpan,
    pub origin: MacroOrigin,
    /// The operation, statement expression or call.
    pub expr: Option<&'a Expr>,
    /// For neutral-operand findings, the neutral operand.
    pub neutral: Option<&'a Expr>,
    /// Operator shape of sibling enumerator initializers, when the finding
    /// sits in one.
    pub enum_siblings: usize,
    /// For dead stores, the stored symbol and whether an enclosing loop's
    /// controlling clauses read it.
    pub store: Option<(SymbolId, bool)>,
    /// For call candidates, whether the callee's definition contains a
    /// conditional directive.
    pub config_dependent: bool,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EffectlessFinding {
    pub kind: OperationKind,
    pub file: String,
    pub span: SourceSpan,
    pub origin: MacroOrigin,
    /// Origin of the neutral operand, for neutral-operand findings.
    pub neutral_origin: Option<MacroOrigin>,
    pub classification: Classification,
    pub message: String,
}

fn has_side_effects(unit: &TypedUnit, e: &Expr) -> bool {
    let mut found = false;
    e.walk(&mut |x| match &x.kind {
        ExprKind::Assign { .. } | ExprKind::Call { .. } => found = true,
        ExprKind::Unary { op, .. } if op.is_inc_dec() => found = true,
        ExprKind::Ident(_) | ExprKind::Unary { op: UnaryOp::Deref, .. } | ExprKind::Member { .. } | ExprKind::Index { .. }
            if unit.try_expr_type(x).is_some_and(|t| t.is_volatile) => {
                found = true;
            }
        _ => {}
    });
    found
}

fn int_const(unit: &TypedUnit, e: &Expr) -> Option<i128> {
    if !unit.try_expr_type(e).is_some_and(|t| t.is_integer()) {
        return None;
    }
    unit.const_value(e, false).ok()
}

fn all_ones(unit: &TypedUnit, e: &Expr) -> bool {
    let Some(v) = int_const(unit, e) else { return false };
    match unit.converted_type(e).int_kind() {
        Some(k) => k.wrap(v) == k.wrap(-1),
        None => false,
    }
}

/// The neutral operand of an operation, if it has one.
pub fn neutral_operand<'a>(unit: &TypedUnit, e: &'a Expr) -> Option<&'a Expr> {
    let is = |x: &Expr, v: i128| int_const(unit, x) == Some(v);
    match &e.kind {
        ExprKind::Binary { op, lhs, rhs } => {
            let (l, r): (&'a Expr, &'a Expr) = (lhs, rhs);
            match op {
                BinaryOp::Add | BinaryOp::BitOr | BinaryOp::BitXor => {
                    if is(r, 0) {
                        Some(r)
                    } else if is(l, 0) {
                        Some(l)
                    } else {
                        None
                    }
                }
                BinaryOp::Sub | BinaryOp::Shl | BinaryOp::Shr => is(r, 0).then_some(r),
                BinaryOp::Mul => {
                    if is(r, 1) {
                        Some(r)
                    } else if is(l, 1) {
                        Some(l)
                    } else {
                        None
                    }
                }
                BinaryOp::Div => is(r, 1).then_some(r),
                BinaryOp::BitAnd => {
                    if all_ones(unit, r) {
                        Some(r)
                    } else if all_ones(unit, l) {
                        Some(l)
                    } else {
                        None
                    }
                }
                _ => None,
            }
        }
        ExprKind::Assign { op: Some(op), rhs, .. } => {
            let r: &'a Expr = rhs;
            let hit = match op {
                BinaryOp::Add | BinaryOp::Sub | BinaryOp::BitOr | BinaryOp::BitXor | BinaryOp::Shl | BinaryOp::Shr => is(r, 0),
                BinaryOp::Mul | BinaryOp::Div => is(r, 1),
                BinaryOp::BitAnd => all_ones(unit, r),
                _ => false,
            };
            hit.then_some(r)
        }
        _ => None,
    }
}

fn operator_symbol(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Binary { op, .. } => op.symbol().to_string(),
        ExprKind::Assign { op: Some(op), .. } => format!("{}=", op.symbol()),
        _ => String::new(),
    }
}

/// Walk evaluated subexpressions (not into `sizeof`).
fn walk_evaluated<'a>(e: &'a Expr, f: &mut dyn FnMut(&'a Expr)) {
    f(e);
    if matches!(e.kind, ExprKind::SizeofExpr(_) | ExprKind::SizeofType(_)) {
        return;
    }
    for c in e.children() {
        walk_evaluated(c, f);
    }
}

fn enum_specs<'a>(specs: &'a DeclSpecs, out: &mut Vec<&'a EnumSpec>) {
    match &specs.ty {
        TypeSpec::Enum(e) if e.enumerators.is_some() => out.push(e),
        TypeSpec::Record(RecordSpec { fields: Some(fields), .. }) => {
            for f in fields {
                enum_specs(&f.specs, out);
            }
        }
        _ => {}
    }
}

fn all_enum_specs(tu: &TranslationUnit) -> Vec<&EnumSpec> {
    let mut out = Vec::new();
    for item in &tu.items {
        match item {
            ExternalDecl::Declaration(d) => enum_specs(&d.specs, &mut out),
            ExternalDecl::Function(f) => {
                enum_specs(&f.specs, &mut out);
                f.body.walk(&mut |s| {
                    if let StmtKind::Decl(d) = &s.kind {
                        enum_specs(&d.specs, &mut out);
                    }
                });
            }
        }
    }
    out
}

/// Number of other enumerators in the same list whose initializer has the
/// same root operator as `value`.
fn enum_sibling_shapes(tu: &TranslationUnit) -> HashMap<ExprId, usize> {
    let mut out = HashMap::new();
    for spec in all_enum_specs(tu) {
        let list = spec.enumerators.as_ref().unwrap();
        let shapes: Vec<Option<BinaryOp>> = list
            .iter()
            .map(|e| match e.value.as_ref().map(|v| &v.kind) {
                Some(ExprKind::Binary { op, .. }) => Some(*op),
                _ => None,
            })
            .collect();
        for (i, e) in list.iter().enumerate() {
            let (Some(v), Some(op)) = (&e.value, shapes[i]) else { continue };
            let siblings = shapes.iter().enumerate().filter(|&(j, s)| j != i && *s == Some(op)).count();
            v.walk(&mut |x| {
                out.insert(x.id, siblings);
            });
        }
    }
    out
}

fn empty_body(f: &FunctionDef) -> bool {
    match &f.body.kind {
        StmtKind::Compound(items) => items.iter().all(|s| matches!(s.kind, StmtKind::Expr(None))),
        _ => false,
    }
}

/// Symbols read by the controlling clauses (condition and step) of each
/// loop, keyed by every statement nested in the loop.
fn loop_reads(body: &Stmt, unit: &TypedUnit) -> HashMap<StmtId, Vec<SymbolId>> {
    fn go(s: &Stmt, unit: &TypedUnit, stack: &mut Vec<Vec<SymbolId>>, out: &mut HashMap<StmtId, Vec<SymbolId>>) {
        let mut pushed = false;
        let clauses: Vec<&Expr> = match &s.kind {
            StmtKind::While { cond, .. } | StmtKind::DoWhile { cond, .. } => vec![cond],
            StmtKind::For { cond, step, .. } => {
                let mut v: Vec<&Expr> = cond.iter().collect();
                if let Some(st) = step {
                    v.extend(st.own_exprs());
                }
                v
            }
            _ => Vec::new(),
        };
        if s.is_condition() && !matches!(s.kind, StmtKind::If { .. } | StmtKind::Switch { .. }) {
            let mut syms = Vec::new();
            for c in clauses {
                c.walk(&mut |x| {
                    if let Some(id) = unit.symbol_id_of(x) {
                        syms.push(id);
                    }
                });
            }
            stack.push(syms);
            pushed = true;
        }
        let all: Vec<SymbolId> = stack.iter().flatten().copied().collect();
        out.insert(s.id, all);
        for c in s.children() {
            go(c, unit, stack, out);
        }
        if pushed {
            stack.pop();
        }
    }
    let mut out = HashMap::new();
    go(body, unit, &mut Vec::new(), &mut out);
    out
}

/// Run the four detectors over the unit.
pub fn detect<'a>(unit: &'a TypedUnit, flow: &FlowFacts<'a>) -> Vec<RawFinding<'a>> {
    let mut out = Vec::new();
    let siblings = enum_sibling_shapes(&unit.ast);
    let raw = |kind, span, origin: &MacroOrigin, expr: Option<&'a Expr>, message: String| RawFinding {
        kind,
        span,
        origin: origin.clone(),
        expr,
        neutral: None,
        enum_siblings: 0,
        store: None,
        config_dependent: false,
        message,
    };
    // (a) expression statements without effect.
    for f in unit.ast.functions() {
        f.body.walk(&mut |s| {
            let StmtKind::Expr(Some(e)) = &s.kind else { return };
            if let ExprKind::Cast { ty, .. } = &e.kind {
                if ty.declarator.derived.is_empty() && matches!(ty.specs.ty, TypeSpec::Void) {
                    return;
                }
            }
            if !has_side_effects(unit, e) {
                out.push(raw(
                    OperationKind::NoEffectExpressionStatement,
                    e.span,
                    &e.origin,
                    Some(e),
                    "expression statement has no effect".into(),
                ));
            }
        });
    }
    // (b) operations with a neutral operand, anywhere in the unit.
    visit_unit_exprs(&unit.ast, &mut |root| {
        walk_evaluated(root, &mut |e| {
            if let Some(n) = neutral_operand(unit, e) {
                let mut r = raw(
                    OperationKind::NeutralOperandOperation,
                    e.span,
                    &e.origin,
                    Some(e),
                    format!("'{}' with neutral operand has no effect", operator_symbol(e)),
                );
                r.neutral = Some(n);
                r.enum_siblings = siblings.get(&e.id).copied().unwrap_or(0);
                out.push(r);
            }
        });
    });
    // (c) dead stores; initializer stores are left to R9.1.
    for f in unit.ast.functions() {
        let Some(facts) = flow.functions.get(f.name()) else { continue };
        let loops = loop_reads(&f.body, unit);
        let exprs: HashMap<ExprId, &'a Expr> = {
            let mut m = HashMap::new();
            for s in facts.stmts.values() {
                for e in s.own_exprs() {
                    e.walk(&mut |x| {
                        m.insert(x.id, x);
                    });
                }
            }
            m
        };
        for d in &facts.liveness.dead_sites {
            let Some(eid) = d.site.expr else { continue };
            let e = exprs.get(&eid).copied();
            let in_loop = loops.get(&d.site.stmt).is_some_and(|v| v.contains(&d.sym));
            let origin = e.map(|e| e.origin.clone()).unwrap_or_default();
            let mut r = raw(
                OperationKind::DeadStore,
                d.site.span,
                &origin,
                e,
                format!("value stored to '{}' is never read", unit.symbol(d.sym).name),
            );
            r.store = Some((d.sym, in_loop));
            out.push(r);
        }
    }
    // (d) calls to functions with an empty body in this unit.
    for f in unit.ast.functions() {
        let mut stmts = Vec::new();
        f.body.walk(&mut |s| stmts.push(s));
        for s in stmts {
            for root in s.own_exprs() {
                walk_evaluated(root, &mut |e| {
                    let Some(callee) = unit.direct_callee(e) else { return };
                    if callee.storage != Storage::Function {
                        return;
                    }
                    let Some(def) = unit.ast.function(&callee.name) else { return };
                    if !empty_body(def) {
                        return;
                    }
                    let mut r = raw(
                        OperationKind::NoEffectCallCandidate,
                        e.span,
                        &e.origin,
                        Some(e),
                        format!("call to '{}' whose body is empty", callee.name),
                    );
                    r.config_dependent = unit.pre.has_conditional_between(def.span.file, def.span.line, def.end.line);
                    out.push(r);
                });
            }
        }
    }
    out
}

/// Justify a raw finding by abstraction provenance or the ledger.
pub fn classify(unit: &TypedUnit, raw: &RawFinding<'_>, ledger: &JustificationLedger) -> EffectlessFinding {
    let file = unit.file_name(raw.span).to_string();
    let mut reason = None;
    let any_node = |e: &Expr, p: &dyn Fn(&Expr) -> bool| {
        let mut hit = false;
        e.walk(&mut |x| hit |= p(x));
        hit
    };
    let is_sizeof = |x: &Expr| matches!(x.kind, ExprKind::SizeofExpr(_) | ExprKind::SizeofType(_));
    match raw.kind {
        OperationKind::NeutralOperandOperation => {
            let n = raw.neutral.expect("neutral operand");
            if !n.origin.is_direct() || any_node(n, &|x| !x.origin.is_direct()) {
                reason = Some(Reason::MacroAbstraction);
            } else if is_sizeof(n) {
                reason = Some(Reason::SizeofAbstraction);
            } else if raw.enum_siblings >= 2 {
                reason = Some(Reason::EnumSeries);
            }
        }
        OperationKind::NoEffectExpressionStatement => {
            let e = raw.expr.expect("statement expression");
            if any_node(e, &|x| !x.origin.is_direct()) {
                reason = Some(Reason::MacroAbstraction);
            } else if any_node(e, &is_sizeof) {
                reason = Some(Reason::SizeofAbstraction);
            }
        }
        OperationKind::DeadStore => {
            if !raw.origin.is_direct() {
                reason = Some(Reason::MacroAbstraction);
            } else if raw.store.is_some_and(|(_, in_loop)| in_loop) {
                reason = Some(Reason::LoopControl);
            }
        }
        OperationKind::NoEffectCallCandidate => {
            if raw.config_dependent {
                reason = Some(Reason::ConfigFunction);
            } else if !raw.origin.is_direct() {
                reason = Some(Reason::MacroAbstraction);
            }
        }
    }
    if reason.is_none() && ledger.find(&file, raw.span.line, EFFECTLESS).is_some() {
        reason = Some(Reason::LedgerEntry);
    }
    EffectlessFinding {
        kind: raw.kind,
        file,
        span: raw.span,
        origin: raw.origin.clone(),
        neutral_origin: raw.neutral.map(|n| n.origin.clone()),
        classification: reason.map_or(Classification::Unjustified, Classification::Justified),
        message: raw.message.clone(),
    }
}

/// Turn classified findings into diagnostics. Findings anchored at the same
/// position merge into one diagnostic.
pub fn report_mode(findings: &[EffectlessFinding], mode: Mode) -> Vec<Diagnostic> {
    let rule = match mode {
        Mode::Off => return Vec::new(),
        Mode::Directive => DIRECTIVE_RULE,
        Mode::StrictR22 => "R2.2",
    };
    let mut groups: BTreeMap<(String, u32, u32), Vec<&EffectlessFinding>> = BTreeMap::new();
    for f in findings {
        if mode == Mode::Directive && f.classification.is_justified() {
            continue;
        }
        groups.entry((f.file.clone(), f.span.line, f.span.column)).or_default().push(f);
    }
    groups
        .into_values()
        .map(|mut group| {
            group.sort_by_key(|f| f.kind);
            let parts: Vec<String> = group
                .iter()
                .map(|f| match f.classification {
                    Classification::Justified(r) => format!("{} [{}; justified: {}]", f.message, f.kind, r),
                    Classification::Unjustified => format!("{} [{}]", f.message, f.kind),
                })
                .collect();
            let first = group[0];
            Diagnostic {
                rule_id: rule.to_string(),
                check_id: EFFECTLESS.to_string(),
                verdict: Verdict::possible(Relation::OverApprox),
                file: first.file.clone(),
                span: first.span,
                message: parts.join("; "),
                origin: first.origin.clone(),
                suppressed_by: None,
            }
        })
        .collect()
}

/// Detect, classify and report in one step.
pub fn run(unit: &TypedUnit, flow: &FlowFacts<'_>, ledger: &JustificationLedger, mode: Mode) -> Vec<Diagnostic> {
    if mode == Mode::Off {
        return Vec::new();
    }
    let findings: Vec<EffectlessFinding> = detect(unit, flow).iter().map(|r| classify(unit, r, ledger)).collect();
    report_mode(&findings, mode)
}

#[cfg(test)]
mod tests;
