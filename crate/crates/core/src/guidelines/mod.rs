//! The rule registry and the decidable approximation checks.

mod const_candidates;
mod cstring;
mod determinate_for;
mod eof_domain;
mod errno;
mod file_deref;
mod init_at_decl;
mod ownership;
mod readonly_params;
mod recursion;
pub mod registry;

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use crate::flow::{FlowFacts, FunctionFacts};
use crate::frontend::ast::{Expr, ExprId, FunctionDef, Stmt, StmtKind};
use crate::frontend::{MacroOrigin, SourceSpan};
use crate::sema::{TypeRepr, TypedUnit};

pub use registry::{lookup, registry, render_registry, Approximations, Category, Cause, Grade, GuidelineInfo};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerdictKind {
    Definite,
    Possible,
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerdictKind::Definite => "definite",
            VerdictKind::Possible => "possible",
        })
    }
}

/// How a check relates to the official rule text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    OverApprox,
    UnderApprox,
    Exact,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::OverApprox => "over-approx",
            Relation::UnderApprox => "under-approx",
            Relation::Exact => "exact",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub relation: Relation,
}

impl Verdict {
    pub const fn definite(relation: Relation) -> Self {
        Verdict { kind: VerdictKind::Definite, relation }
    }

    pub const fn possible(relation: Relation) -> Self {
        Verdict { kind: VerdictKind::Possible, relation }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub rule_id: String,
    pub check_id: String,
    pub verdict: Verdict,
    pub file: String,
    pub span: SourceSpan,
    pub message: String,
    pub origin: MacroOrigin,
    /// `ledger:LINE` when a ledger entry covers this finding.
    pub suppressed_by: Option<String>,
}

impl Diagnostic {
    pub fn new(
        unit: &TypedUnit,
        rule_id: &str,
        check_id: &str,
        verdict: Verdict,
        span: SourceSpan,
        origin: MacroOrigin,
        message: impl Into<String>,
    ) -> Self {
        Diagnostic {
            rule_id: rule_id.to_string(),
            check_id: check_id.to_string(),
            verdict,
            file: unit.file_name(span).to_string(),
            span,
            message: message.into(),
            origin,
            suppressed_by: None,
        }
    }

    pub fn sort_key(&self) -> (&str, u32, u32, &str, &str, &str) {
        (&self.file, self.span.line, self.span.column, &self.rule_id, &self.check_id, &self.message)
    }
}

/// Sort by file, line, column, rule, check and message, dropping exact
/// duplicates.
pub fn sort_diagnostics(diags: &mut Vec<Diagnostic>) {
    diags.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    diags.dedup();
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    /// Only the decidable approximations.
    #[default]
    Strict,
    /// Flow facts downgrade or drop findings they disprove.
    Heuristic,
}

pub const FILE_DEREF: &str = "file-deref-r22-5";
pub const READONLY_PARAMS: &str = "readonly-params-r17-8";
pub const CONST_CANDIDATES: &str = "const-candidates-r8-13";
pub const INIT_AT_DECL: &str = "init-at-decl-r9-1";
pub const DETERMINATE_FOR: &str = "determinate-for-r14-1-2";
pub const NO_RECURSION: &str = "no-recursion-r17-2";
pub const EOF_DOMAIN: &str = "eof-domain-r21-13";
pub const CSTRING: &str = "cstring-r21-14-19";
pub const ERRNO_PROTOCOL: &str = "errno-protocol-r22-8-9-10";
pub const STREAM_OWNERSHIP: &str = "stream-ownership-r22-1";
pub const COVERAGE_R2_1: &str = "coverage-r2-1";
pub const COVERAGE_R14_3: &str = "coverage-r14-3";
pub const EFFECTLESS: &str = "effectless";

/// Checks run by `run_checks`.
pub const GUIDELINE_CHECKS: &[&str] = &[
    FILE_DEREF,
    READONLY_PARAMS,
    CONST_CANDIDATES,
    INIT_AT_DECL,
    DETERMINATE_FOR,
    NO_RECURSION,
    EOF_DOMAIN,
    CSTRING,
    ERRNO_PROTOCOL,
    STREAM_OWNERSHIP,
];

/// Every check id the tool knows, including the coverage and effectless
/// engines.
pub fn all_check_ids() -> Vec<&'static str> {
    let mut v = GUIDELINE_CHECKS.to_vec();
    v.extend([COVERAGE_R2_1, COVERAGE_R14_3, EFFECTLESS]);
    v
}

pub struct CheckContext<'a> {
    pub unit: &'a TypedUnit,
    pub flow: &'a FlowFacts<'a>,
    pub profile: Profile,
}

impl<'a> CheckContext<'a> {
    pub fn new(unit: &'a TypedUnit, flow: &'a FlowFacts<'a>, profile: Profile) -> Self {
        CheckContext { unit, flow, profile }
    }

    pub fn facts(&self, f: &FunctionDef) -> &FunctionFacts<'a> {
        &self.flow.functions[f.name()]
    }

    pub fn diag(&self, rule: &str, check: &str, verdict: Verdict, span: SourceSpan, origin: MacroOrigin, msg: impl Into<String>) -> Diagnostic {
        Diagnostic::new(self.unit, rule, check, verdict, span, origin, msg)
    }

    pub fn type_name(&self, t: &TypeRepr) -> String {
        self.unit.type_name(t)
    }
}

/// Run the enabled guideline checks and return their findings sorted.
pub fn run_checks(ctx: &CheckContext<'_>, enabled: &dyn Fn(&str) -> bool) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let checks: [(&str, fn(&CheckContext<'_>) -> Vec<Diagnostic>); 10] = [
        (FILE_DEREF, file_deref::check),
        (READONLY_PARAMS, readonly_params::check),
        (CONST_CANDIDATES, const_candidates::check),
        (INIT_AT_DECL, init_at_decl::check),
        (DETERMINATE_FOR, determinate_for::check),
        (NO_RECURSION, recursion::check),
        (EOF_DOMAIN, eof_domain::check),
        (CSTRING, cstring::check),
        (ERRNO_PROTOCOL, errno::check),
        (STREAM_OWNERSHIP, ownership::check),
    ];
    for (id, f) in checks {
        if enabled(id) {
            out.extend(f(ctx));
        }
    }
    sort_diagnostics(&mut out);
    out
}

/// Where an expression sits: its parent expression, or the statement that
/// evaluates it at the root.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Parent<'a> {
    Expr(&'a Expr),
    Stmt(&'a Stmt),
}

/// Parent links for every expression in a function body.
pub(crate) fn parent_map(body: &Stmt) -> HashMap<ExprId, Parent<'_>> {
    let mut m = HashMap::new();
    body.walk(&mut |s| {
        let roots: Vec<&Expr> = match &s.kind {
            StmtKind::Case { value, .. } => vec![value],
            _ => s.own_exprs(),
        };
        for r in roots {
            m.insert(r.id, Parent::Stmt(s));
            r.walk(&mut |e| {
                for c in e.children() {
                    m.insert(c.id, Parent::Expr(e));
                }
            });
        }
    });
    m
}

/// Root expressions of every statement in a function body, with the
/// statement evaluating them.
pub(crate) fn root_exprs(body: &Stmt) -> Vec<(&Stmt, &Expr)> {
    let mut out = Vec::new();
    body.walk(&mut |s| {
        for e in s.own_exprs() {
            out.push((s, e));
        }
    });
    out
}

/// Every expression node in a function body with its statement.
pub(crate) fn all_exprs(body: &Stmt) -> Vec<(&Stmt, &Expr)> {
    let mut out = Vec::new();
    for (s, r) in root_exprs(body) {
        r.walk(&mut |e| out.push((s, e)));
    }
    out
}

/// `e` with explicit casts and nothing else removed.
pub(crate) fn strip_casts(mut e: &Expr) -> &Expr {
    while let crate::frontend::ast::ExprKind::Cast { expr, .. } = &e.kind {
        e = expr;
    }
    e
}

/// How a pointer value is used by its context.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum PointerUse {
    /// Only read through, compared, or converted to a pointer to const.
    ReadOnly,
    /// The pointee is modified through this value.
    WrittenThrough,
    /// The value flows somewhere that may modify the pointee.
    Escapes,
}

/// Classify how the pointer value of `e` is used, following derived
/// pointers (`e + n`, casts to pointer-to-const) upward.
pub(crate) fn pointer_use(unit: &TypedUnit, parents: &HashMap<ExprId, Parent<'_>>, e: &Expr) -> PointerUse {
    use crate::frontend::ast::{BinaryOp, ExprKind, UnaryOp};
    let conv = unit.converted_type(e);
    let const_target = conv.pointee().is_some_and(|p| p.is_const);
    match parents.get(&e.id) {
        None => PointerUse::Escapes,
        Some(Parent::Stmt(s)) => match &s.kind {
            StmtKind::Expr(_) | StmtKind::If { .. } | StmtKind::While { .. } | StmtKind::DoWhile { .. } | StmtKind::For { .. } => {
                PointerUse::ReadOnly
            }
            _ if const_target => PointerUse::ReadOnly,
            _ => PointerUse::Escapes,
        },
        Some(Parent::Expr(p)) => match &p.kind {
            ExprKind::Unary { op: UnaryOp::Deref, .. } => access_use(unit, parents, p),
            ExprKind::Index { base, .. } if base.id == e.id => access_use(unit, parents, p),
            // `i[p]`
            ExprKind::Index { .. } if unit.operand_type(e).is_pointer() => access_use(unit, parents, p),
            ExprKind::Index { .. } => PointerUse::ReadOnly,
            ExprKind::Member { arrow: true, .. } => access_use(unit, parents, p),
            ExprKind::Binary { op, .. } if op.is_comparison() || op.is_logical() => PointerUse::ReadOnly,
            ExprKind::Binary { op: BinaryOp::Add | BinaryOp::Sub, .. } if unit.expr_type(p).is_pointer() => {
                pointer_use(unit, parents, p)
            }
            ExprKind::Binary { op: BinaryOp::Sub, .. } => PointerUse::ReadOnly,
            ExprKind::Unary { op: UnaryOp::Not, .. } => PointerUse::ReadOnly,
            ExprKind::Unary { op, .. } if op.is_inc_dec() => PointerUse::ReadOnly,
            ExprKind::Assign { lhs, .. } if lhs.id == e.id => PointerUse::ReadOnly,
            ExprKind::Conditional { cond, .. } if cond.id == e.id => PointerUse::ReadOnly,
            ExprKind::Conditional { .. } if const_target => PointerUse::ReadOnly,
            ExprKind::Conditional { .. } => pointer_use(unit, parents, p),
            ExprKind::Comma { lhs, .. } if lhs.id == e.id => PointerUse::ReadOnly,
            ExprKind::Comma { .. } => pointer_use(unit, parents, p),
            ExprKind::SizeofExpr(_) => PointerUse::ReadOnly,
            ExprKind::Cast { .. } => {
                let t = unit.expr_type(p);
                if !t.is_pointer() || t.pointee().is_some_and(|q| q.is_const) {
                    PointerUse::ReadOnly
                } else {
                    pointer_use(unit, parents, p)
                }
            }
            ExprKind::Call { callee, .. } if callee.id == e.id => PointerUse::ReadOnly,
            _ if const_target => PointerUse::ReadOnly,
            _ => PointerUse::Escapes,
        },
    }
}

/// Use of the object designated by `access` (`*p`, `p[i]`, `p->f`).
fn access_use(unit: &TypedUnit, parents: &HashMap<ExprId, Parent<'_>>, access: &Expr) -> PointerUse {
    use crate::frontend::ast::{ExprKind, UnaryOp};
    match parents.get(&access.id) {
        Some(Parent::Expr(p)) => match &p.kind {
            ExprKind::Assign { lhs, .. } if lhs.id == access.id => PointerUse::WrittenThrough,
            ExprKind::Unary { op, .. } if op.is_inc_dec() => PointerUse::WrittenThrough,
            ExprKind::Unary { op: UnaryOp::AddrOf, .. } => match pointer_use(unit, parents, p) {
                PointerUse::ReadOnly => PointerUse::ReadOnly,
                _ => PointerUse::Escapes,
            },
            ExprKind::Member { arrow: false, .. } => access_use(unit, parents, p),
            ExprKind::Index { base, .. } if base.id == access.id && unit.expr_type(access).is_array() => {
                access_use(unit, parents, p)
            }
            _ if unit.expr_type(access).is_array() => match pointer_use(unit, parents, access) {
                PointerUse::ReadOnly => PointerUse::ReadOnly,
                _ => PointerUse::Escapes,
            },
            _ => PointerUse::ReadOnly,
        },
        _ if unit.expr_type(access).is_array() => match pointer_use(unit, parents, access) {
            PointerUse::ReadOnly => PointerUse::ReadOnly,
            _ => PointerUse::Escapes,
        },
        _ => PointerUse::ReadOnly,
    }
}

#[cfg(test)]
mod tests;
