//! Reads and writes of automatic variables performed by one statement, in
//! evaluation order (left to right where C leaves the order unspecified).

use crate::frontend::ast::*;
use crate::frontend::SourceSpan;
use crate::sema::{Storage, SymbolId, TypedUnit};

/// Where a store happens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StoreSite {
    pub stmt: StmtId,
    /// The assignment or increment expression, or `None` for an initializer.
    pub expr: Option<ExprId>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, Copy)]
pub enum Effect<'a> {
    Use { sym: SymbolId, expr: &'a Expr },
    Def {
        sym: SymbolId,
        site: StoreSite,
        /// Stored value when it is exactly an expression's value.
        value: Option<&'a Expr>,
        /// False when the store happens only on some evaluations of the
        /// statement (inside `&&`, `||` or `?:`).
        killing: bool,
    },
    /// Declaration without initializer: the variable's lifetime restarts.
    Declare { sym: SymbolId },
}

/// Effects of `stmt` itself (not of nested statements).
pub fn stmt_effects<'a>(unit: &'a TypedUnit, stmt: &'a Stmt) -> Vec<Effect<'a>> {
    let mut w = Walker { unit, stmt: stmt.id, out: Vec::new() };
    match &stmt.kind {
        StmtKind::Decl(d) => {
            for i in &d.declarators {
                let Some(sym) = unit.declarator_symbol(i.declarator.id) else { continue };
                if unit.symbol(sym).storage != Storage::Automatic {
                    continue;
                }
                match &i.init {
                    None => w.out.push(Effect::Declare { sym }),
                    Some(init) => {
                        for e in init.exprs() {
                            w.expr(e, false);
                        }
                        let value = match init {
                            Initializer::Expr(e) => Some(e),
                            Initializer::List { .. } => None,
                        };
                        let span = i.declarator.name.as_ref().map_or(i.declarator.span, |n| n.span);
                        w.out.push(Effect::Def { sym, site: StoreSite { stmt: stmt.id, expr: None, span }, value, killing: true });
                    }
                }
            }
        }
        _ => {
            for e in stmt.own_exprs() {
                w.expr(e, false);
            }
        }
    }
    w.out
}

struct Walker<'a> {
    unit: &'a TypedUnit,
    stmt: StmtId,
    out: Vec<Effect<'a>>,
}

impl<'a> Walker<'a> {
    fn auto_sym(&self, e: &Expr) -> Option<SymbolId> {
        let s = self.unit.symbol_of(e)?;
        (s.storage == Storage::Automatic).then_some(s.id)
    }

    fn expr(&mut self, e: &'a Expr, cond: bool) {
        match &e.kind {
            ExprKind::Ident(_) => {
                if let Some(sym) = self.auto_sym(e) {
                    self.out.push(Effect::Use { sym, expr: e });
                }
            }
            ExprKind::Assign { op, lhs, rhs } => {
                if let Some(sym) = lhs.as_ident().and(self.auto_sym(lhs)) {
                    if op.is_some() {
                        self.out.push(Effect::Use { sym, expr: lhs });
                    }
                    self.expr(rhs, cond);
                    let value = if op.is_none() { Some(&**rhs) } else { None };
                    self.def(sym, e, value, cond);
                } else {
                    self.expr(rhs, cond);
                    self.lvalue(lhs, cond);
                }
            }
            ExprKind::Unary { op, operand } if op.is_inc_dec() => {
                if let Some(sym) = operand.as_ident().and(self.auto_sym(operand)) {
                    self.out.push(Effect::Use { sym, expr: operand });
                    self.def(sym, e, None, cond);
                } else {
                    self.lvalue(operand, cond);
                }
            }
            ExprKind::Unary { op: UnaryOp::AddrOf, operand } => self.lvalue(operand, cond),
            ExprKind::SizeofExpr(_) | ExprKind::SizeofType(_) => {}
            ExprKind::Binary { op, lhs, rhs } if op.is_logical() => {
                self.expr(lhs, cond);
                self.expr(rhs, true);
            }
            ExprKind::Conditional { cond: c, then, els } => {
                self.expr(c, cond);
                self.expr(then, true);
                self.expr(els, true);
            }
            _ => {
                for c in e.children() {
                    self.expr(c, cond);
                }
            }
        }
    }

    fn def(&mut self, sym: SymbolId, at: &Expr, value: Option<&'a Expr>, cond: bool) {
        let site = StoreSite { stmt: self.stmt, expr: Some(at.id), span: at.span };
        self.out.push(Effect::Def { sym, site, value, killing: !cond });
    }

    /// Subexpressions evaluated to locate an lvalue, without reading the
    /// designated object itself.
    fn lvalue(&mut self, e: &'a Expr, cond: bool) {
        match &e.kind {
            ExprKind::Ident(_) => {}
            ExprKind::Index { base, index } => {
                if self.unit.expr_type(base).is_array() {
                    self.lvalue(base, cond);
                } else {
                    self.expr(base, cond);
                }
                self.expr(index, cond);
            }
            ExprKind::Member { base, arrow: false, .. } => self.lvalue(base, cond),
            ExprKind::Member { base, arrow: true, .. } => self.expr(base, cond),
            ExprKind::Unary { op: UnaryOp::Deref, operand } => self.expr(operand, cond),
            _ => self.expr(e, cond),
        }
    }
}
