//! Classification of `int` arguments against the domain of the character
//! classification functions: `EOF` or a value representable as
//! `unsigned char`.

use serde::Serialize;

use crate::frontend::ast::{Expr, ExprKind};

use super::libc::LibcTag;
use super::resolve::{Storage, TypedUnit};
use super::types::IntKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EofClass {
    EofAble,
    UcharSafe,
    Unsafe,
}

/// A definition reaching a read, as computed by the flow module.
#[derive(Debug, Clone, Copy)]
pub enum ReachingDef<'a> {
    /// The variable was assigned the value of this expression.
    Value(&'a Expr),
    /// Entry value of a parameter, an uninitialized declaration, or a store
    /// the analysis cannot see through.
    Opaque,
}

/// Source of reaching definitions for a variable read.
pub trait ReachingDefs<'a> {
    /// Definitions of the variable read by `read` that reach it.
    fn defs_for(&self, read: &Expr) -> Option<Vec<ReachingDef<'a>>>;
}

/// Classify `expr`. Variables are followed through `reaching` up to a
/// small depth; anything not understood is `Unsafe`.
pub fn eof_domain<'a>(unit: &'a TypedUnit, expr: &'a Expr, reaching: &dyn ReachingDefs<'a>) -> EofClass {
    classify(unit, expr, reaching, 0)
}

const MAX_DEPTH: usize = 16;

fn join(a: EofClass, b: EofClass) -> EofClass {
    match (a, b) {
        (EofClass::Unsafe, _) | (_, EofClass::Unsafe) => EofClass::Unsafe,
        (EofClass::UcharSafe, EofClass::UcharSafe) => EofClass::UcharSafe,
        _ => EofClass::EofAble,
    }
}

fn classify<'a>(unit: &'a TypedUnit, e: &'a Expr, reaching: &dyn ReachingDefs<'a>, depth: usize) -> EofClass {
    if depth > MAX_DEPTH {
        return EofClass::Unsafe;
    }
    if let Ok(v) = unit.const_value(e, true) {
        return if (0..=255).contains(&v) {
            EofClass::UcharSafe
        } else if v == -1 {
            EofClass::EofAble
        } else {
            EofClass::Unsafe
        };
    }
    match &e.kind {
        ExprKind::Call { .. } if unit.callee_tag(e) == Some(LibcTag::EofProducing) => EofClass::EofAble,
        ExprKind::Cast { .. } if unit.expr_type(e).int_kind() == Some(IntKind::UChar) => EofClass::UcharSafe,
        ExprKind::Assign { op: None, rhs, .. } => classify(unit, rhs, reaching, depth + 1),
        ExprKind::Comma { rhs, .. } => classify(unit, rhs, reaching, depth + 1),
        ExprKind::Conditional { then, els, .. } => {
            join(classify(unit, then, reaching, depth + 1), classify(unit, els, reaching, depth + 1))
        }
        _ if unit.expr_type(e).int_kind() == Some(IntKind::UChar) => EofClass::UcharSafe,
        ExprKind::Ident(_) => {
            let Some(sym) = unit.symbol_of(e) else { return EofClass::Unsafe };
            if sym.storage != Storage::Automatic || sym.ty.int_kind() != Some(IntKind::Int) {
                return EofClass::Unsafe;
            }
            let Some(defs) = reaching.defs_for(e) else { return EofClass::Unsafe };
            if defs.is_empty() {
                return EofClass::Unsafe;
            }
            defs.iter().fold(None, |acc: Option<EofClass>, d| {
                let c = match d {
                    ReachingDef::Value(v) => classify(unit, v, reaching, depth + 1),
                    ReachingDef::Opaque => EofClass::Unsafe,
                };
                Some(acc.map_or(c, |a| join(a, c)))
            })
            .unwrap_or(EofClass::Unsafe)
        }
        _ => EofClass::Unsafe,
    }
}
