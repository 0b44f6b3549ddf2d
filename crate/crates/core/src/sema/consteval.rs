//! Integer constant expression evaluation under the fixed dialect.
//!
//! Values are computed in `i128` and then checked against the width of the
//! expression's type: signed overflow is an error, unsigned results wrap.

use crate::frontend::ast::{BinaryOp, Expr, ExprKind, UnaryOp};
use crate::frontend::SourceSpan;

use super::types::{usual_arithmetic, IntKind, TypeRepr};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConstError {
    /// The expression is not an integer constant expression.
    NotConstant,
    /// Constant, but its evaluation is undefined (overflow, division by zero,
    /// out-of-range shift).
    Invalid { span: SourceSpan, message: String },
}

/// What the evaluator needs from the surrounding analysis.
pub trait ConstEnv {
    fn expr_type(&self, e: &Expr) -> Option<TypeRepr>;
    fn ident_value(&self, e: &Expr) -> Option<i128>;
    fn sizeof_value(&self, e: &Expr) -> Option<u64>;
}

fn invalid(e: &Expr, message: &str) -> ConstError {
    ConstError::Invalid { span: e.span, message: message.to_string() }
}

fn kind_of(env: &dyn ConstEnv, e: &Expr) -> Result<IntKind, ConstError> {
    env.expr_type(e).and_then(|t| t.int_kind()).ok_or(ConstError::NotConstant)
}

fn check(kind: IntKind, v: i128, e: &Expr) -> Result<i128, ConstError> {
    if kind.is_signed() {
        if kind.fits(v) {
            Ok(v)
        } else {
            Err(invalid(e, "integer overflow in constant expression"))
        }
    } else {
        Ok(kind.wrap(v))
    }
}

/// Evaluate `e` as an integer constant expression.
pub fn eval(env: &dyn ConstEnv, e: &Expr) -> Result<i128, ConstError> {
    match &e.kind {
        ExprKind::IntLit { value, .. } => Ok(*value as i128),
        ExprKind::CharLit(v) => Ok(*v as i128),
        ExprKind::Ident(_) => env.ident_value(e).ok_or(ConstError::NotConstant),
        ExprKind::SizeofExpr(_) | ExprKind::SizeofType(_) => {
            env.sizeof_value(e).map(|v| v as i128).ok_or(ConstError::NotConstant)
        }
        ExprKind::Cast { expr, .. } => {
            let to = kind_of(env, e)?;
            let v = eval(env, expr)?;
            Ok(to.wrap(v))
        }
        ExprKind::Unary { op, operand } => {
            let kind = kind_of(env, e)?;
            let v = convert(env, operand, kind)?;
            match op {
                UnaryOp::Plus => Ok(v),
                UnaryOp::Neg => check(kind, -v, e),
                UnaryOp::BitNot => Ok(kind.wrap(!v)),
                UnaryOp::Not => Ok((eval(env, operand)? == 0) as i128),
                _ => Err(ConstError::NotConstant),
            }
        }
        ExprKind::Binary { op, lhs, rhs } => eval_binary(env, e, *op, lhs, rhs),
        ExprKind::Conditional { cond, then, els } => {
            let kind = kind_of(env, e)?;
            if eval(env, cond)? != 0 {
                convert(env, then, kind)
            } else {
                convert(env, els, kind)
            }
        }
        _ => Err(ConstError::NotConstant),
    }
}

/// Evaluate `e` and convert the result to `kind`.
fn convert(env: &dyn ConstEnv, e: &Expr, kind: IntKind) -> Result<i128, ConstError> {
    Ok(kind.wrap(eval(env, e)?))
}

fn eval_binary(env: &dyn ConstEnv, e: &Expr, op: BinaryOp, lhs: &Expr, rhs: &Expr) -> Result<i128, ConstError> {
    match op {
        BinaryOp::LogAnd => {
            return Ok((eval(env, lhs)? != 0 && eval(env, rhs)? != 0) as i128);
        }
        BinaryOp::LogOr => {
            return Ok((eval(env, lhs)? != 0 || eval(env, rhs)? != 0) as i128);
        }
        _ => {}
    }
    if op.is_comparison() {
        let lt = env.expr_type(lhs).ok_or(ConstError::NotConstant)?;
        let rt = env.expr_type(rhs).ok_or(ConstError::NotConstant)?;
        let common = usual_arithmetic(&lt, &rt).int_kind().ok_or(ConstError::NotConstant)?;
        let a = convert(env, lhs, common)?;
        let b = convert(env, rhs, common)?;
        let r = match op {
            BinaryOp::Lt => a < b,
            BinaryOp::Gt => a > b,
            BinaryOp::Le => a <= b,
            BinaryOp::Ge => a >= b,
            BinaryOp::Eq => a == b,
            _ => a != b,
        };
        return Ok(r as i128);
    }
    let kind = kind_of(env, e)?;
    if matches!(op, BinaryOp::Shl | BinaryOp::Shr) {
        let a = convert(env, lhs, kind)?;
        let b = eval(env, rhs)?;
        if b < 0 || b >= kind.bits() as i128 {
            return Err(invalid(e, "shift count out of range in constant expression"));
        }
        if op == BinaryOp::Shr {
            return Ok(a >> b);
        }
        if kind.is_signed() && a < 0 {
            return Err(invalid(e, "left shift of negative value in constant expression"));
        }
        return check(kind, a.wrapping_shl(b as u32), e);
    }
    let a = convert(env, lhs, kind)?;
    let b = convert(env, rhs, kind)?;
    let v = match op {
        BinaryOp::Add => a.wrapping_add(b),
        BinaryOp::Sub => a.wrapping_sub(b),
        BinaryOp::Mul => a.wrapping_mul(b),
        BinaryOp::Div | BinaryOp::Rem => {
            if b == 0 {
                return Err(invalid(e, "division by zero in constant expression"));
            }
            // i128 division truncates toward zero, as C does.
            if op == BinaryOp::Div {
                a / b
            } else {
                a % b
            }
        }
        BinaryOp::BitAnd => a & b,
        BinaryOp::BitOr => a | b,
        BinaryOp::BitXor => a ^ b,
        _ => return Err(ConstError::NotConstant),
    };
    check(kind, v, e)
}
