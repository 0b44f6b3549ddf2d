//! Big-step execution of statements and expressions.

use std::collections::HashMap;

use crate::frontend::ast::*;
use crate::frontend::SourceSpan;
use crate::sema::types::RecordId;
use crate::sema::{IntKind, Storage, SymbolId, TypeKind, TypeRepr, TypedUnit};

use super::memory::{AllocKind, Fault, Memory, Pointer};
use super::{ExecutionTrace, OpenResource, Outcome, RuntimeError, RuntimeErrorKind, StoreEvent, MAX_CALL_DEPTH};

#[derive(Debug, Clone, PartialEq)]
pub(super) enum Value {
    Int(i128),
    Float(f64),
    Ptr(Pointer),
    /// Records, with per-byte init bits.
    Bytes(Vec<u8>, Vec<bool>),
    Void,
}

pub(super) enum Stop {
    Exit(i64),
    Fuel,
    Error(RuntimeError),
    Inconclusive { function: String, span: SourceSpan },
    Unsupported { message: String, span: SourceSpan },
    Depth,
}

pub(super) type R<T> = Result<T, Stop>;

enum Flow {
    Normal,
    Break,
    Continue,
    Return(Option<Value>),
    Goto(StmtId),
}

struct Frame {
    id: u32,
    function: String,
    locals: HashMap<SymbolId, Pointer>,
    allocs: Vec<Pointer>,
}

pub(super) struct Interp<'a> {
    pub unit: &'a TypedUnit,
    pub mem: Memory,
    globals: HashMap<SymbolId, Pointer>,
    functions: HashMap<String, Pointer>,
    fn_by_alloc: HashMap<u32, String>,
    strlits: HashMap<ExprId, Pointer>,
    parents: HashMap<StmtId, StmtId>,
    labels: HashMap<(String, String), StmtId>,
    switch_cases: HashMap<StmtId, Vec<(Option<i128>, StmtId)>>,
    frames: Vec<Frame>,
    next_frame: u32,
    cur_stmt: Option<StmtId>,
    fuel: u64,
    executed: Vec<StmtId>,
    events: Vec<StoreEvent>,
    pending: HashMap<(u32, SymbolId), usize>,
    pub output: Vec<u8>,
    pub stdin: Pointer,
    pub stdout: Pointer,
}

/// Members of a record with their byte offsets, laid out like `size_align`.
pub(super) fn record_layout(unit: &TypedUnit, rid: RecordId) -> Vec<(String, u64, TypeRepr)> {
    let records = unit.records();
    let Some(def) = records.get(rid.0 as usize) else { return Vec::new() };
    let Some(members) = &def.members else { return Vec::new() };
    let mut out = Vec::new();
    let mut size = 0u64;
    for m in members {
        let (s, a) = m.ty.size_align(records).unwrap_or((0, 1));
        let off = if def.is_union { 0 } else { size.div_ceil(a) * a };
        out.push((m.name.clone(), off, m.ty.clone()));
        if !def.is_union {
            size = off + s;
        }
    }
    out
}

impl<'a> Interp<'a> {
    fn new(unit: &'a TypedUnit, fuel: u64) -> Self {
        let mut parents = HashMap::new();
        let mut labels = HashMap::new();
        let mut switch_cases = HashMap::new();
        for f in unit.ast.functions() {
            let name = f.name().to_string();
            f.body.walk(&mut |s| {
                for c in s.children() {
                    parents.insert(c.id, s.id);
                }
                match &s.kind {
                    StmtKind::Labeled { label, .. } => {
                        labels.insert((name.clone(), label.name.clone()), s.id);
                    }
                    StmtKind::Switch { body, .. } => {
                        let mut cases = Vec::new();
                        collect_cases(unit, body, &mut cases);
                        switch_cases.insert(s.id, cases);
                    }
                    _ => {}
                }
            });
        }
        Interp {
            unit,
            mem: Memory::new(),
            globals: HashMap::new(),
            functions: HashMap::new(),
            fn_by_alloc: HashMap::new(),
            strlits: HashMap::new(),
            parents,
            labels,
            switch_cases,
            frames: Vec::new(),
            next_frame: 0,
            cur_stmt: None,
            fuel,
            executed: Vec::new(),
            events: Vec::new(),
            pending: HashMap::new(),
            output: Vec::new(),
            stdin: Pointer::NULL,
            stdout: Pointer::NULL,
        }
    }

    // ---- errors ----

    pub fn fault(&self, span: SourceSpan, f: Fault) -> Stop {
        Stop::Error(RuntimeError { kind: f.kind, stmt: self.cur_stmt, span, message: f.message })
    }

    pub fn error(&self, span: SourceSpan, kind: RuntimeErrorKind, message: impl Into<String>) -> Stop {
        self.fault(span, Fault::new(kind, message))
    }

    fn unsupported(span: SourceSpan, message: impl Into<String>) -> Stop {
        Stop::Unsupported { message: message.into(), span }
    }

    // ---- setup ----

    fn function_pointer(&mut self, name: &str) -> Pointer {
        if let Some(p) = self.functions.get(name) {
            return *p;
        }
        let p = self.mem.alloc(AllocKind::Function(name.to_string()), 0, true);
        self.functions.insert(name.to_string(), p);
        self.fn_by_alloc.insert(p.alloc, name.to_string());
        p
    }

    pub fn new_stream(&mut self, name: &str, site: Option<SourceSpan>, standard: bool) -> Pointer {
        let kind = AllocKind::Stream { name: name.to_string(), site, input: Vec::new(), pos: 0, eof: false, standard };
        self.mem.alloc(kind, 0, true)
    }

    fn init_globals(&mut self) -> R<()> {
        let unit = self.unit;
        for s in &unit.symbols {
            let object = matches!(s.storage, Storage::Extern | Storage::Static) && !s.ty.is_function();
            if !object {
                continue;
            }
            let size = s.ty.size(unit.records()).unwrap_or(0);
            let p = self.mem.alloc(AllocKind::Global(s.id), size, true);
            self.globals.insert(s.id, p);
            if s.builtin && s.ty.is_file_pointer() {
                let stream = self.new_stream(&s.name, None, true);
                match s.name.as_str() {
                    "stdin" => self.stdin = stream,
                    "stdout" => self.stdout = stream,
                    _ => {}
                }
                self.mem.write(p, &stream.encode().to_le_bytes()).expect("fresh global");
            }
        }
        let mut decls: Vec<&'a Declaration> = Vec::new();
        for item in &unit.ast.items {
            match item {
                ExternalDecl::Declaration(d) => decls.push(d),
                ExternalDecl::Function(f) => f.body.walk(&mut |s| {
                    if let StmtKind::Decl(d) = &s.kind {
                        if d.specs.storage == Some(StorageClass::Static) {
                            decls.push(d);
                        }
                    }
                }),
            }
        }
        for d in decls {
            for id in &d.declarators {
                let (Some(init), Some(sid)) = (&id.init, unit.declarator_symbol(id.declarator.id)) else { continue };
                let Some(&p) = self.globals.get(&sid) else { continue };
                let ty = unit.symbol(sid).ty.clone();
                self.init_object(p, &ty, init)?;
            }
        }
        Ok(())
    }

    // ---- tracing ----

    fn tick(&mut self, s: StmtId) -> R<()> {
        if self.executed.len() as u64 >= self.fuel {
            return Err(Stop::Fuel);
        }
        self.executed.push(s);
        self.cur_stmt = Some(s);
        Ok(())
    }

    fn tracked(&self, e: &Expr) -> Option<SymbolId> {
        let sid = self.unit.symbol_id_of(e)?;
        self.unit.symbol(sid).is_tracked_scalar().then_some(sid)
    }

    fn frame_id(&self) -> u32 {
        self.frames.last().map_or(u32::MAX, |f| f.id)
    }

    fn note_read(&mut self, sid: SymbolId) {
        if let Some(&i) = self.pending.get(&(self.frame_id(), sid)) {
            self.events[i].read_back = true;
        }
    }

    fn note_store(&mut self, sid: SymbolId) {
        let Some(stmt) = self.cur_stmt else { return };
        self.events.push(StoreEvent { stmt, sym: sid, read_back: false });
        self.pending.insert((self.frame_id(), sid), self.events.len() - 1);
    }

    fn end_scope(&mut self, sid: SymbolId) {
        self.pending.remove(&(self.frame_id(), sid));
    }

    // ---- memory access ----

    pub fn size_of(&self, ty: &TypeRepr) -> u64 {
        ty.size(self.unit.records()).unwrap_or(0)
    }

    pub fn load(&mut self, p: Pointer, ty: &TypeRepr, span: SourceSpan) -> R<Value> {
        let f = |this: &Self, e: Fault| this.fault(span, e);
        match &ty.kind {
            TypeKind::Int(_) | TypeKind::Enum(_) => {
                let k = ty.int_kind().expect("integer");
                let bytes = self.mem.read(p, (k.bits() / 8) as usize).map_err(|e| f(self, e))?;
                let mut u: u128 = 0;
                for (i, b) in bytes.iter().enumerate() {
                    u |= (*b as u128) << (8 * i);
                }
                Ok(Value::Int(k.wrap(u as i128)))
            }
            TypeKind::Float(32) => {
                let b = self.mem.read(p, 4).map_err(|e| f(self, e))?;
                Ok(Value::Float(f32::from_le_bytes(b.try_into().expect("4 bytes")) as f64))
            }
            TypeKind::Float(_) => {
                let b = self.mem.read(p, 8).map_err(|e| f(self, e))?;
                Ok(Value::Float(f64::from_le_bytes(b.try_into().expect("8 bytes"))))
            }
            TypeKind::Pointer(_) => {
                let b = self.mem.read(p, 8).map_err(|e| f(self, e))?;
                Ok(Value::Ptr(Pointer::decode(u64::from_le_bytes(b.try_into().expect("8 bytes")))))
            }
            TypeKind::Record(_) | TypeKind::Array(..) => {
                let (b, i) = self.mem.read_raw(p, self.size_of(ty) as usize).map_err(|e| f(self, e))?;
                Ok(Value::Bytes(b, i))
            }
            TypeKind::Opaque(_) => {
                self.mem.read_raw(p, 1).map_err(|e| f(self, e))?;
                Err(Self::unsupported(span, "value of an opaque type"))
            }
            TypeKind::Void | TypeKind::Function { .. } => Err(Self::unsupported(span, "load of a non-object type")),
        }
    }

    pub fn store(&mut self, p: Pointer, ty: &TypeRepr, v: &Value, span: SourceSpan) -> R<()> {
        let bytes: Vec<u8> = match (&ty.kind, v) {
            (TypeKind::Int(_) | TypeKind::Enum(_), Value::Int(i)) => {
                let n = (ty.int_kind().expect("integer").bits() / 8) as usize;
                (*i as u128).to_le_bytes()[..n].to_vec()
            }
            (TypeKind::Float(32), Value::Float(x)) => (*x as f32).to_le_bytes().to_vec(),
            (TypeKind::Float(_), Value::Float(x)) => x.to_le_bytes().to_vec(),
            (TypeKind::Pointer(_), Value::Ptr(q)) => q.encode().to_le_bytes().to_vec(),
            (TypeKind::Record(_) | TypeKind::Array(..), Value::Bytes(b, i)) => {
                return self.mem.write_raw(p, b, i).map_err(|e| self.fault(span, e));
            }
            _ => {
                let v = self.convert(v.clone(), ty, span)?;
                if std::mem::discriminant(&v) == std::mem::discriminant(&Value::Void) {
                    return Err(Self::unsupported(span, "store of a void value"));
                }
                return self.store(p, ty, &v, span);
            }
        };
        self.mem.write(p, &bytes).map_err(|e| self.fault(span, e))
    }

    // ---- values ----

    pub fn truthy(&self, v: &Value, span: SourceSpan) -> R<bool> {
        match v {
            Value::Int(i) => Ok(*i != 0),
            Value::Float(x) => Ok(*x != 0.0),
            Value::Ptr(p) => Ok(!p.is_null()),
            _ => Err(Self::unsupported(span, "non-scalar condition")),
        }
    }

    pub fn convert(&self, v: Value, to: &TypeRepr, span: SourceSpan) -> R<Value> {
        Ok(match &to.kind {
            TypeKind::Void => Value::Void,
            TypeKind::Int(IntKind::Bool) => Value::Int(self.truthy(&v, span)? as i128),
            TypeKind::Int(_) | TypeKind::Enum(_) => {
                let k = to.int_kind().expect("integer");
                match v {
                    Value::Int(i) => Value::Int(k.wrap(i)),
                    Value::Float(x) => {
                        let t = x.trunc();
                        let ok = t.is_finite() && t.abs() < 1.7e38 && k.fits(t as i128);
                        if !ok {
                            return Err(self.error(
                                span,
                                RuntimeErrorKind::ConversionOverflow,
                                format!("{x} is out of range for '{}'", k.name()),
                            ));
                        }
                        Value::Int(t as i128)
                    }
                    Value::Ptr(p) => Value::Int(k.wrap(p.encode() as i128)),
                    other => other,
                }
            }
            TypeKind::Float(w) => {
                let x = match v {
                    Value::Int(i) => i as f64,
                    Value::Float(x) => x,
                    _ => return Err(Self::unsupported(span, "conversion to floating type")),
                };
                Value::Float(if *w == 32 { x as f32 as f64 } else { x })
            }
            TypeKind::Pointer(_) => match v {
                Value::Int(i) => Value::Ptr(Pointer::decode(i as u64)),
                other => other,
            },
            _ => v,
        })
    }

    fn as_int(&self, v: &Value, span: SourceSpan) -> R<i128> {
        match v {
            Value::Int(i) => Ok(*i),
            Value::Ptr(p) => Ok(p.encode() as i128),
            _ => Err(Self::unsupported(span, "expected an integer value")),
        }
    }

    fn as_ptr(&self, v: &Value, span: SourceSpan) -> R<Pointer> {
        match v {
            Value::Ptr(p) => Ok(*p),
            Value::Int(i) => Ok(Pointer::decode(*i as u64)),
            _ => Err(Self::unsupported(span, "expected a pointer value")),
        }
    }

    fn elem_size(&self, ptr_ty: &TypeRepr) -> i64 {
        match ptr_ty.pointee() {
            Some(t) if t.is_void() || t.is_function() => 1,
            Some(t) => self.size_of(t) as i64,
            None => 1,
        }
    }

    /// Integer or floating arithmetic in type `ty`.
    fn arith(&self, op: BinaryOp, a: &Value, b: &Value, ty: &TypeRepr, span: SourceSpan) -> R<Value> {
        if let TypeKind::Float(w) = ty.kind {
            let f = |v: &Value| match v {
                Value::Float(x) => Ok(*x),
                Value::Int(i) => Ok(*i as f64),
                _ => Err(Self::unsupported(span, "floating operands")),
            };
            let (x, y) = (f(a)?, f(b)?);
            let r = match op {
                BinaryOp::Add => x + y,
                BinaryOp::Sub => x - y,
                BinaryOp::Mul => x * y,
                BinaryOp::Div => x / y,
                _ => return Err(Self::unsupported(span, "floating operator")),
            };
            return Ok(Value::Float(if w == 32 { r as f32 as f64 } else { r }));
        }
        let Some(k) = ty.int_kind() else {
            return Err(Self::unsupported(span, "arithmetic on a non-arithmetic type"));
        };
        let (x, y) = (self.as_int(a, span)?, self.as_int(b, span)?);
        let signed = k.is_signed();
        let bits = k.bits();
        let mask: u128 = if bits >= 128 { u128::MAX } else { (1u128 << bits) - 1 };
        let overflow = |what: &str| {
            self.error(span, RuntimeErrorKind::SignedOverflow, format!("{what} overflows '{}'", k.name()))
        };
        let checked = |r: Option<i128>, what: &str| -> R<Value> {
            match r {
                Some(r) if !signed || k.fits(r) => Ok(Value::Int(k.wrap(r))),
                _ if !signed => unreachable!("unsigned arithmetic is computed modulo"),
                _ => Err(overflow(what)),
            }
        };
        match op {
            BinaryOp::Add if signed => checked(x.checked_add(y), "addition"),
            BinaryOp::Sub if signed => checked(x.checked_sub(y), "subtraction"),
            BinaryOp::Mul if signed => checked(x.checked_mul(y), "multiplication"),
            BinaryOp::Add => Ok(Value::Int(k.wrap(((x as u128).wrapping_add(y as u128) & mask) as i128))),
            BinaryOp::Sub => Ok(Value::Int(k.wrap(((x as u128).wrapping_sub(y as u128) & mask) as i128))),
            BinaryOp::Mul => Ok(Value::Int(k.wrap(((x as u128).wrapping_mul(y as u128) & mask) as i128))),
            BinaryOp::Div | BinaryOp::Rem => {
                if y == 0 {
                    let what = if op == BinaryOp::Div { "division" } else { "remainder" };
                    return Err(self.error(span, RuntimeErrorKind::DivisionByZero, format!("{what} by zero")));
                }
                let q = x / y;
                if signed && !k.fits(q) {
                    return Err(overflow("division"));
                }
                Ok(Value::Int(k.wrap(if op == BinaryOp::Div { q } else { x % y })))
            }
            BinaryOp::Shl | BinaryOp::Shr => {
                if y < 0 || y >= bits as i128 {
                    return Err(self.error(
                        span,
                        RuntimeErrorKind::InvalidShift,
                        format!("shift by {y} in a {bits}-bit type"),
                    ));
                }
                if op == BinaryOp::Shr {
                    return Ok(Value::Int(k.wrap(x >> y)));
                }
                if signed {
                    if x < 0 {
                        return Err(self.error(span, RuntimeErrorKind::InvalidShift, "left shift of a negative value"));
                    }
                    let r = x << y;
                    if !k.fits(r) {
                        return Err(overflow("left shift"));
                    }
                    Ok(Value::Int(r))
                } else {
                    Ok(Value::Int(k.wrap((((x as u128) << y) & mask) as i128)))
                }
            }
            BinaryOp::BitAnd => Ok(Value::Int(k.wrap(x & y))),
            BinaryOp::BitOr => Ok(Value::Int(k.wrap(x | y))),
            BinaryOp::BitXor => Ok(Value::Int(k.wrap(x ^ y))),
            _ => Err(Self::unsupported(span, "operator")),
        }
    }

    fn compare(&self, op: BinaryOp, a: &Value, b: &Value, span: SourceSpan) -> R<bool> {
        use std::cmp::Ordering;
        let ord: Option<Ordering> = match (a, b) {
            (Value::Int(x), Value::Int(y)) => Some(x.cmp(y)),
            (Value::Float(x), Value::Float(y)) => x.partial_cmp(y),
            (Value::Float(x), Value::Int(y)) => x.partial_cmp(&(*y as f64)),
            (Value::Int(x), Value::Float(y)) => (*x as f64).partial_cmp(y),
            _ => {
                let (p, q) = (self.as_ptr(a, span)?, self.as_ptr(b, span)?);
                Some((p.alloc, p.off).cmp(&(q.alloc, q.off)))
            }
        };
        let Some(ord) = ord else { return Ok(op == BinaryOp::Ne) };
        Ok(match op {
            BinaryOp::Lt => ord == Ordering::Less,
            BinaryOp::Gt => ord == Ordering::Greater,
            BinaryOp::Le => ord != Ordering::Greater,
            BinaryOp::Ge => ord != Ordering::Less,
            BinaryOp::Eq => ord == Ordering::Equal,
            _ => ord != Ordering::Equal,
        })
    }

    // ---- places ----

    fn local(&mut self, sid: SymbolId) -> Pointer {
        if let Some(p) = self.frames.last().and_then(|f| f.locals.get(&sid)) {
            return *p;
        }
        // Reached by jumping past the declaration.
        let ty = self.unit.symbol(sid).ty.clone();
        let p = self.mem.alloc(AllocKind::Local(sid), self.size_of(&ty), false);
        if let Some(f) = self.frames.last_mut() {
            f.locals.insert(sid, p);
            f.allocs.push(p);
        }
        p
    }

    fn symbol_place(&mut self, sid: SymbolId) -> Pointer {
        match self.unit.symbol(sid).storage {
            Storage::Automatic => self.local(sid),
            _ => self.globals.get(&sid).copied().unwrap_or(Pointer::NULL),
        }
    }

    fn strlit(&mut self, e: &Expr, bytes: &[u8]) -> Pointer {
        if let Some(p) = self.strlits.get(&e.id) {
            return *p;
        }
        let p = self.mem.alloc(AllocKind::StrLit, bytes.len() as u64 + 1, true);
        let a = self.mem.get_mut(p).expect("fresh");
        a.bytes[..bytes.len()].copy_from_slice(bytes);
        a.readonly = true;
        self.strlits.insert(e.id, p);
        p
    }

    /// Address and type of an lvalue; other record-valued expressions are
    /// materialized in a temporary.
    fn place(&mut self, e: &'a Expr) -> R<(Pointer, TypeRepr)> {
        let ty = self.unit.expr_type(e).clone();
        match &e.kind {
            ExprKind::Ident(_) => {
                let sid = self.unit.symbol_id_of(e).ok_or_else(|| Self::unsupported(e.span, "unresolved name"))?;
                Ok((self.symbol_place(sid), ty))
            }
            ExprKind::StrLit(bytes) => Ok((self.strlit(e, bytes), ty)),
            ExprKind::Unary { op: UnaryOp::Deref, operand } => {
                let v = self.rv(operand)?;
                Ok((self.as_ptr(&v, e.span)?, ty))
            }
            ExprKind::Index { base, index } => {
                let b = self.rv(base)?;
                let i = self.rv(index)?;
                let (p, n) = match (&b, &i) {
                    (Value::Ptr(p), _) => (*p, self.as_int(&i, e.span)?),
                    (_, Value::Ptr(p)) => (*p, self.as_int(&b, e.span)?),
                    _ => return Err(Self::unsupported(e.span, "subscript")),
                };
                let size = self.size_of(&ty) as i128;
                Ok((p.offset((n * size) as i64), ty))
            }
            ExprKind::Member { base, field, arrow } => {
                let (bp, bt) = if *arrow {
                    let v = self.rv(base)?;
                    let t = self.unit.operand_type(base).pointee().cloned().unwrap_or_else(TypeRepr::void);
                    (self.as_ptr(&v, e.span)?, t)
                } else {
                    self.place(base)?
                };
                let off = match bt.kind {
                    TypeKind::Record(rid) => record_layout(self.unit, rid)
                        .into_iter()
                        .find(|(n, _, _)| *n == field.name)
                        .map_or(0, |(_, o, _)| o),
                    _ => 0,
                };
                Ok((bp.offset(off as i64), ty))
            }
            _ => {
                let v = self.rv(e)?;
                let size = self.size_of(&ty);
                let p = self.mem.alloc(AllocKind::Temp, size, false);
                self.store(p, &ty, &v, e.span)?;
                Ok((p, ty))
            }
        }
    }

    /// Value read from a place, with arrays and functions decaying.
    fn read_place(&mut self, p: Pointer, ty: &TypeRepr, span: SourceSpan) -> R<Value> {
        match ty.kind {
            TypeKind::Array(..) | TypeKind::Function { .. } => Ok(Value::Ptr(p)),
            _ => self.load(p, ty, span),
        }
    }

    // ---- expressions ----

    /// Value of `e` after the implicit conversion at its use site.
    pub fn rv(&mut self, e: &'a Expr) -> R<Value> {
        let v = self.eval(e, true)?;
        match self.unit.conversions.get(&e.id) {
            Some(t) => self.convert(v, t, e.span),
            None => Ok(v),
        }
    }

    fn eval(&mut self, e: &'a Expr, used: bool) -> R<Value> {
        let unit = self.unit;
        match &e.kind {
            ExprKind::Ident(_) => {
                let sid = unit.symbol_id_of(e).ok_or_else(|| Self::unsupported(e.span, "unresolved name"))?;
                let sym = unit.symbol(sid);
                match sym.storage {
                    Storage::Enumerator => Ok(Value::Int(sym.enum_value.unwrap_or(0))),
                    Storage::Function => Ok(Value::Ptr(self.function_pointer(&sym.name))),
                    _ => {
                        let p = self.symbol_place(sid);
                        let ty = unit.expr_type(e).clone();
                        let v = self.read_place(p, &ty, e.span)?;
                        if sym.is_tracked_scalar() {
                            self.note_read(sid);
                        }
                        Ok(v)
                    }
                }
            }
            ExprKind::IntLit { value, .. } => Ok(Value::Int(*value as i128)),
            ExprKind::CharLit(c) => Ok(Value::Int(*c as i128)),
            ExprKind::FloatLit { value, single } => Ok(Value::Float(if *single { *value as f32 as f64 } else { *value })),
            ExprKind::StrLit(bytes) => Ok(Value::Ptr(self.strlit(e, bytes))),
            ExprKind::Unary { op, operand } => self.unary(e, *op, operand),
            ExprKind::Binary { op, lhs, rhs } => self.binary(e, *op, lhs, rhs),
            ExprKind::Assign { op, lhs, rhs } => self.assign(e, *op, lhs, rhs),
            ExprKind::Conditional { cond, then, els } => {
                let c = self.rv(cond)?;
                if self.truthy(&c, cond.span)? {
                    self.rv(then)
                } else {
                    self.rv(els)
                }
            }
            ExprKind::Comma { lhs, rhs } => {
                self.eval(lhs, false)?;
                self.rv(rhs)
            }
            ExprKind::Call { callee, args } => self.call(e, callee, args, used),
            ExprKind::Cast { expr, .. } => {
                let to = unit.expr_type(e).clone();
                let used = used && !to.is_void();
                let v = if used { self.rv(expr)? } else { self.eval(expr, false)? };
                self.convert(v, &to, e.span)
            }
            ExprKind::SizeofExpr(_) | ExprKind::SizeofType(_) => {
                Ok(Value::Int(unit.sizeof_value(e).unwrap_or(0) as i128))
            }
            ExprKind::Member { .. } | ExprKind::Index { .. } => {
                let (p, ty) = self.place(e)?;
                self.read_place(p, &ty, e.span)
            }
        }
    }

    fn unary(&mut self, e: &'a Expr, op: UnaryOp, operand: &'a Expr) -> R<Value> {
        let ty = self.unit.expr_type(e).clone();
        match op {
            UnaryOp::Plus => self.rv(operand),
            UnaryOp::Neg => {
                let v = self.rv(operand)?;
                match v {
                    Value::Float(x) => Ok(Value::Float(-x)),
                    _ => self.arith(BinaryOp::Sub, &Value::Int(0), &v, &ty, e.span),
                }
            }
            UnaryOp::BitNot => {
                let v = self.rv(operand)?;
                let k = ty.int_kind().ok_or_else(|| Self::unsupported(e.span, "'~' operand"))?;
                Ok(Value::Int(k.wrap(!self.as_int(&v, e.span)?)))
            }
            UnaryOp::Not => {
                let v = self.rv(operand)?;
                Ok(Value::Int(!self.truthy(&v, operand.span)? as i128))
            }
            UnaryOp::Deref => {
                let v = self.rv(operand)?;
                let p = self.as_ptr(&v, e.span)?;
                if ty.is_function() {
                    return Ok(Value::Ptr(p));
                }
                self.read_place(p, &ty, e.span)
            }
            UnaryOp::AddrOf => {
                if self.unit.expr_type(operand).is_function() {
                    return self.eval(operand, true);
                }
                Ok(Value::Ptr(self.place(operand)?.0))
            }
            UnaryOp::PreInc | UnaryOp::PreDec | UnaryOp::PostInc | UnaryOp::PostDec => {
                let (p, lt) = self.place(operand)?;
                let old = self.load(p, &lt, e.span)?;
                let tracked = self.tracked(operand);
                if let Some(sid) = tracked {
                    self.note_read(sid);
                }
                let dec = matches!(op, UnaryOp::PreDec | UnaryOp::PostDec);
                let new = match &old {
                    Value::Ptr(q) => {
                        let step = self.elem_size(&lt);
                        Value::Ptr(q.offset(if dec { -step } else { step }))
                    }
                    Value::Float(x) => self.convert(Value::Float(if dec { x - 1.0 } else { x + 1.0 }), &lt, e.span)?,
                    _ => {
                        let prom = lt.promote();
                        let a = self.convert(old.clone(), &prom, e.span)?;
                        let bop = if dec { BinaryOp::Sub } else { BinaryOp::Add };
                        let r = self.arith(bop, &a, &Value::Int(1), &prom, e.span)?;
                        self.convert(r, &lt, e.span)?
                    }
                };
                self.store(p, &lt, &new, e.span)?;
                if let Some(sid) = tracked {
                    self.note_store(sid);
                }
                Ok(if matches!(op, UnaryOp::PreInc | UnaryOp::PreDec) { new } else { old })
            }
        }
    }

    fn binary(&mut self, e: &'a Expr, op: BinaryOp, lhs: &'a Expr, rhs: &'a Expr) -> R<Value> {
        match op {
            BinaryOp::LogAnd | BinaryOp::LogOr => {
                let a = self.rv(lhs)?;
                let a = self.truthy(&a, lhs.span)?;
                if a == (op == BinaryOp::LogOr) {
                    return Ok(Value::Int(a as i128));
                }
                let b = self.rv(rhs)?;
                Ok(Value::Int(self.truthy(&b, rhs.span)? as i128))
            }
            _ if op.is_comparison() => {
                let a = self.rv(lhs)?;
                let b = self.rv(rhs)?;
                Ok(Value::Int(self.compare(op, &a, &b, e.span)? as i128))
            }
            _ => {
                let a = self.rv(lhs)?;
                let b = self.rv(rhs)?;
                let lt = self.unit.converted_type(lhs);
                let rt = self.unit.converted_type(rhs);
                match (&a, &b) {
                    (Value::Ptr(p), Value::Ptr(q)) if op == BinaryOp::Sub => {
                        if p.alloc != q.alloc {
                            return Err(self.error(
                                e.span,
                                RuntimeErrorKind::OobAccess,
                                "subtraction of pointers into different objects",
                            ));
                        }
                        Ok(Value::Int(((p.off - q.off) / self.elem_size(&lt).max(1)) as i128))
                    }
                    (Value::Ptr(p), _) if lt.is_pointer() => {
                        let n = self.as_int(&b, e.span)? as i64;
                        let step = self.elem_size(&lt);
                        Ok(Value::Ptr(p.offset(if op == BinaryOp::Sub { -n * step } else { n * step })))
                    }
                    (_, Value::Ptr(q)) if rt.is_pointer() => {
                        let n = self.as_int(&a, e.span)? as i64;
                        Ok(Value::Ptr(q.offset(n * self.elem_size(&rt))))
                    }
                    _ => {
                        let ty = self.unit.expr_type(e).clone();
                        self.arith(op, &a, &b, &ty, e.span)
                    }
                }
            }
        }
    }

    fn assign(&mut self, e: &'a Expr, op: Option<BinaryOp>, lhs: &'a Expr, rhs: &'a Expr) -> R<Value> {
        let (p, lt) = self.place(lhs)?;
        let tracked = self.tracked(lhs);
        let new = match op {
            None => self.rv(rhs)?,
            Some(bop) => {
                let old = self.load(p, &lt, e.span)?;
                if let Some(sid) = tracked {
                    self.note_read(sid);
                }
                let r = self.rv(rhs)?;
                if let Value::Ptr(q) = old {
                    let n = self.as_int(&r, e.span)? as i64;
                    let step = self.elem_size(&lt);
                    Value::Ptr(q.offset(if bop == BinaryOp::Sub { -n * step } else { n * step }))
                } else {
                    let common = if matches!(bop, BinaryOp::Shl | BinaryOp::Shr) {
                        lt.promote()
                    } else {
                        self.unit.converted_type(rhs)
                    };
                    let a = self.convert(old, &common, e.span)?;
                    let res = self.arith(bop, &a, &r, &common, e.span)?;
                    self.convert(res, &lt, e.span)?
                }
            }
        };
        self.store(p, &lt, &new, e.span)?;
        if let Some(sid) = tracked {
            self.note_store(sid);
        }
        Ok(new)
    }

    fn call(&mut self, e: &'a Expr, callee: &'a Expr, args: &'a [Expr], used: bool) -> R<Value> {
        let target = self.rv(callee)?;
        let p = self.as_ptr(&target, callee.span)?;
        let Some(name) = self.fn_by_alloc.get(&p.alloc).cloned().filter(|_| p.off == 0) else {
            let kind = if p.is_null() { RuntimeErrorKind::NullDeref } else { RuntimeErrorKind::OobAccess };
            return Err(self.error(e.span, kind, "call through a pointer that does not point to a function"));
        };
        let mut values = Vec::with_capacity(args.len());
        for a in args {
            values.push(self.rv(a)?);
        }
        let ret = self.invoke(&name, values, e)?;
        match ret {
            Some(v) => Ok(v),
            None if used && !self.unit.expr_type(e).is_void() => Err(self.error(
                e.span,
                RuntimeErrorKind::UninitializedRead,
                format!("use of the value of '{name}', which ended without returning one"),
            )),
            None => Ok(Value::Void),
        }
    }

    pub fn invoke(&mut self, name: &str, args: Vec<Value>, call: &'a Expr) -> R<Option<Value>> {
        if let Some(def) = self.unit.ast.function(name) {
            return self.call_user(def, args, call.span);
        }
        if let Some(r) = super::libc::call(self, name, &args, call) {
            return r;
        }
        Err(Stop::Inconclusive { function: name.to_string(), span: call.span })
    }

    fn call_user(&mut self, def: &'a FunctionDef, args: Vec<Value>, span: SourceSpan) -> R<Option<Value>> {
        if self.frames.len() >= MAX_CALL_DEPTH {
            return Err(Stop::Depth);
        }
        let name = def.name().to_string();
        let params: Vec<SymbolId> = self.unit.function_info(&name).map(|f| f.params.clone()).unwrap_or_default();
        self.next_frame += 1;
        let mut frame = Frame { id: self.next_frame, function: name, locals: HashMap::new(), allocs: Vec::new() };
        let mut inits = Vec::new();
        for (sid, v) in params.iter().zip(args) {
            let ty = self.unit.symbol(*sid).ty.clone();
            let p = self.mem.alloc(AllocKind::Local(*sid), self.size_of(&ty), false);
            frame.locals.insert(*sid, p);
            frame.allocs.push(p);
            inits.push((p, ty, v));
        }
        for (p, ty, v) in inits {
            self.store(p, &ty, &v, span)?;
        }
        self.frames.push(frame);
        let saved = self.cur_stmt;
        let flow = self.exec(&def.body, None);
        let frame = self.frames.pop().expect("frame");
        self.pending.retain(|(f, _), _| *f != frame.id);
        for p in frame.allocs {
            self.mem.kill(p);
        }
        self.cur_stmt = saved;
        match flow? {
            Flow::Return(v) => Ok(v),
            _ => Ok(None),
        }
    }

    // ---- statements ----

    fn contains(&self, outer: StmtId, mut t: StmtId) -> bool {
        loop {
            if t == outer {
                return true;
            }
            match self.parents.get(&t) {
                Some(p) => t = *p,
                None => return false,
            }
        }
    }

    fn cond(&mut self, e: &'a Expr) -> R<bool> {
        let v = self.rv(e)?;
        self.truthy(&v, e.span)
    }

    fn exec_items(&mut self, items: &'a [Stmt], seek: Option<StmtId>) -> R<Flow> {
        let mut seek = seek;
        let mut i = match seek {
            Some(t) => match items.iter().position(|c| self.contains(c.id, t)) {
                Some(i) => i,
                None => return Ok(Flow::Normal),
            },
            None => 0,
        };
        while i < items.len() {
            match self.exec(&items[i], seek.take())? {
                Flow::Normal => i += 1,
                Flow::Goto(t) => match items.iter().position(|c| self.contains(c.id, t)) {
                    Some(j) => {
                        i = j;
                        seek = Some(t);
                    }
                    None => return Ok(Flow::Goto(t)),
                },
                f => return Ok(f),
            }
        }
        Ok(Flow::Normal)
    }

    fn exec(&mut self, s: &'a Stmt, seek: Option<StmtId>) -> R<Flow> {
        let seek = seek.filter(|t| *t != s.id);
        let within = |this: &Self, child: &Stmt| seek.is_some_and(|t| this.contains(child.id, t));
        match &s.kind {
            StmtKind::Compound(items) => self.exec_items(items, seek),
            StmtKind::Labeled { body, .. } | StmtKind::Case { body, .. } | StmtKind::Default { body } => {
                self.exec(body, seek)
            }
            _ if seek.is_some() && !s.children().iter().any(|c| within(self, c)) => Ok(Flow::Normal),
            StmtKind::Expr(None) => Ok(Flow::Normal),
            StmtKind::Expr(Some(e)) => {
                self.tick(s.id)?;
                self.eval(e, false)?;
                Ok(Flow::Normal)
            }
            StmtKind::Decl(d) => {
                self.tick(s.id)?;
                self.exec_decl(d)?;
                Ok(Flow::Normal)
            }
            StmtKind::If { cond, then, els } => {
                if seek.is_some() {
                    if within(self, then) {
                        return self.exec(then, seek);
                    }
                    return self.exec(els.as_deref().expect("seek target in else"), seek);
                }
                self.tick(s.id)?;
                if self.cond(cond)? {
                    self.exec(then, None)
                } else if let Some(e) = els {
                    self.exec(e, None)
                } else {
                    Ok(Flow::Normal)
                }
            }
            StmtKind::While { cond, body } => {
                let mut seek = seek;
                loop {
                    if seek.is_none() {
                        self.tick(s.id)?;
                        if !self.cond(cond)? {
                            return Ok(Flow::Normal);
                        }
                    }
                    match self.exec(body, seek.take())? {
                        Flow::Break => return Ok(Flow::Normal),
                        Flow::Normal | Flow::Continue => {}
                        f => return Ok(f),
                    }
                }
            }
            StmtKind::DoWhile { body, cond } => {
                let mut seek = seek;
                loop {
                    match self.exec(body, seek.take())? {
                        Flow::Break => return Ok(Flow::Normal),
                        Flow::Normal | Flow::Continue => {}
                        f => return Ok(f),
                    }
                    self.tick(s.id)?;
                    if !self.cond(cond)? {
                        return Ok(Flow::Normal);
                    }
                }
            }
            StmtKind::For { init, cond, step, body } => {
                let mut seek = seek;
                if seek.is_none() {
                    if let Some(i) = init {
                        self.exec(i, None)?;
                    }
                }
                loop {
                    if seek.is_none() {
                        self.tick(s.id)?;
                        if let Some(c) = cond {
                            if !self.cond(c)? {
                                return Ok(Flow::Normal);
                            }
                        }
                    }
                    match self.exec(body, seek.take())? {
                        Flow::Break => return Ok(Flow::Normal),
                        Flow::Normal | Flow::Continue => {}
                        f => return Ok(f),
                    }
                    if let Some(st) = step {
                        self.exec(st, None)?;
                    }
                }
            }
            StmtKind::Switch { cond, body } => {
                let target = if seek.is_some() {
                    seek
                } else {
                    self.tick(s.id)?;
                    let v = self.rv(cond)?;
                    let v = self.as_int(&v, cond.span)?;
                    let cases = &self.switch_cases[&s.id];
                    cases
                        .iter()
                        .find(|(c, _)| *c == Some(v))
                        .or_else(|| cases.iter().find(|(c, _)| c.is_none()))
                        .map(|(_, id)| *id)
                };
                let Some(target) = target else { return Ok(Flow::Normal) };
                match self.exec(body, Some(target))? {
                    Flow::Break => Ok(Flow::Normal),
                    f => Ok(f),
                }
            }
            StmtKind::Goto(label) => {
                self.tick(s.id)?;
                let function = self.frames.last().map(|f| f.function.clone()).unwrap_or_default();
                match self.labels.get(&(function, label.name.clone())) {
                    Some(t) => Ok(Flow::Goto(*t)),
                    None => Err(Self::unsupported(s.span, format!("undefined label '{}'", label.name))),
                }
            }
            StmtKind::Continue => {
                self.tick(s.id)?;
                Ok(Flow::Continue)
            }
            StmtKind::Break => {
                self.tick(s.id)?;
                Ok(Flow::Break)
            }
            StmtKind::Return(v) => {
                self.tick(s.id)?;
                let v = match v {
                    Some(e) => Some(self.rv(e)?),
                    None => None,
                };
                Ok(Flow::Return(v))
            }
        }
    }

    fn exec_decl(&mut self, d: &'a Declaration) -> R<()> {
        if matches!(d.specs.storage, Some(StorageClass::Static | StorageClass::Extern | StorageClass::Typedef)) {
            return Ok(());
        }
        for id in &d.declarators {
            let Some(sid) = self.unit.declarator_symbol(id.declarator.id) else { continue };
            let sym = self.unit.symbol(sid);
            if sym.storage != Storage::Automatic {
                continue;
            }
            let ty = sym.ty.clone();
            let tracked = sym.is_tracked_scalar();
            self.end_scope(sid);
            let p = self.mem.alloc(AllocKind::Local(sid), self.size_of(&ty), false);
            if let Some(f) = self.frames.last_mut() {
                if let Some(old) = f.locals.insert(sid, p) {
                    self.mem.kill(old);
                }
                f.allocs.push(p);
            }
            if let Some(init) = &id.init {
                self.init_object(p, &ty, init)?;
                if tracked {
                    self.note_store(sid);
                }
            }
        }
        Ok(())
    }

    fn init_object(&mut self, p: Pointer, ty: &TypeRepr, init: &'a Initializer) -> R<()> {
        match init {
            Initializer::Expr(e) => {
                if let (TypeKind::Array(_, _), ExprKind::StrLit(bytes)) = (&ty.kind, &e.kind) {
                    let n = self.size_of(ty) as usize;
                    let mut buf = vec![0u8; n];
                    let k = bytes.len().min(n);
                    buf[..k].copy_from_slice(&bytes[..k]);
                    return self.mem.write(p, &buf).map_err(|f| self.fault(e.span, f));
                }
                let v = self.rv(e)?;
                self.store(p, ty, &v, e.span)
            }
            Initializer::List { items, span } => {
                let n = self.size_of(ty) as usize;
                self.mem.write(p, &vec![0u8; n]).map_err(|f| self.fault(*span, f))?;
                match &ty.kind {
                    TypeKind::Array(elem, _) => {
                        let size = self.size_of(elem) as i64;
                        for (i, it) in items.iter().enumerate() {
                            self.init_object(p.offset(i as i64 * size), elem, it)?;
                        }
                        Ok(())
                    }
                    TypeKind::Record(rid) => {
                        let layout = record_layout(self.unit, *rid);
                        for (it, (_, off, mty)) in items.iter().zip(layout) {
                            self.init_object(p.offset(off as i64), &mty, it)?;
                        }
                        Ok(())
                    }
                    _ => match items.first() {
                        Some(it) => self.init_object(p, ty, it),
                        None => Ok(()),
                    },
                }
            }
        }
    }

    pub fn current_stmt(&self) -> Option<StmtId> {
        self.cur_stmt
    }

    pub fn write_errno(&mut self, value: i128) {
        if let Some(sid) = self.unit.global("errno").map(|s| s.id) {
            if let Some(&p) = self.globals.get(&sid) {
                let _ = self.mem.write(p, &(value as i32).to_le_bytes());
            }
        }
    }

    pub fn exit_code(&self, v: &Value) -> i64 {
        match v {
            Value::Int(i) => *i as i64,
            _ => 0,
        }
    }
}

fn collect_cases(unit: &TypedUnit, s: &Stmt, out: &mut Vec<(Option<i128>, StmtId)>) {
    match &s.kind {
        StmtKind::Switch { .. } => return,
        StmtKind::Case { value, .. } => out.push((unit.const_value(value, false).ok(), s.id)),
        StmtKind::Default { .. } => out.push((None, s.id)),
        _ => {}
    }
    for c in s.children() {
        collect_cases(unit, c, out);
    }
}

/// Run `entry` to completion, exhaustion or error.
pub(super) fn execute(unit: &TypedUnit, entry: &str, inputs: &[i64], fuel: u64) -> ExecutionTrace {
    let mut it = Interp::new(unit, fuel);
    let result = it.init_globals().and_then(|()| {
        let def = unit.ast.function(entry).expect("entry checked");
        let params = unit.function_info(entry).map(|f| f.params.clone()).unwrap_or_default();
        let args: Vec<Value> = params
            .iter()
            .zip(inputs)
            .map(|(p, v)| {
                let k = unit.symbol(*p).ty.int_kind().unwrap_or(IntKind::Int);
                Value::Int(k.wrap(*v as i128))
            })
            .collect();
        it.call_user(def, args, def.span)
    });
    let outcome = match result {
        Ok(v) => Outcome::Terminated { code: v.as_ref().map_or(0, |v| it.exit_code(v)) },
        Err(Stop::Exit(code)) => Outcome::Terminated { code },
        Err(Stop::Fuel) => Outcome::FuelExhausted,
        Err(Stop::Error(e)) => Outcome::RuntimeError(e),
        Err(Stop::Inconclusive { function, span }) => Outcome::Inconclusive { function, span },
        Err(Stop::Unsupported { message, span }) => Outcome::Unsupported { message, span },
        Err(Stop::Depth) => Outcome::CallDepthExceeded,
    };
    let mut open_resources = Vec::new();
    if matches!(outcome, Outcome::Terminated { .. }) {
        for (_, a) in it.mem.iter() {
            if !a.live {
                continue;
            }
            match &a.kind {
                AllocKind::Heap { site, .. } => open_resources.push(OpenResource { kind: "memory", site: *site }),
                AllocKind::Stream { site: Some(site), standard: false, .. } => {
                    open_resources.push(OpenResource { kind: "stream", site: *site })
                }
                _ => {}
            }
        }
    }
    ExecutionTrace { executed: it.executed, store_events: it.events, outcome, output: it.output, open_resources }
}
