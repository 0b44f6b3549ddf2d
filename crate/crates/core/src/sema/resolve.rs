//! Name resolution and expression typing.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::frontend::ast::*;
use crate::frontend::preprocess::Preprocessed;
use crate::frontend::SourceSpan;

use super::consteval::{self, ConstEnv, ConstError};
use super::libc::{LibcProfile, LibcTag};
use super::types::*;
use super::SemaError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct SymbolId(pub u32);

impl SymbolId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Storage {
    Automatic,
    Static,
    Extern,
    TypedefName,
    Enumerator,
    Function,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Symbol {
    pub id: SymbolId,
    pub name: String,
    pub decl_span: SourceSpan,
    pub storage: Storage,
    pub ty: TypeRepr,
    pub libc_tag: Option<LibcTag>,
    pub is_parameter: bool,
    pub address_taken: bool,
    /// Enclosing function for block-scope symbols.
    pub function: Option<String>,
    /// Functions with a body; objects with an initializer.
    pub defined: bool,
    pub enum_value: Option<i128>,
    /// Value of a const-qualified block-scope integer with a constant
    /// initializer.
    pub const_value: Option<i128>,
    /// Declared by the library profile rather than the unit.
    pub builtin: bool,
}

impl Symbol {
    /// Automatic scalar that the intraprocedural analyses track.
    pub fn is_tracked_scalar(&self) -> bool {
        self.storage == Storage::Automatic && self.ty.is_scalar() && !self.address_taken && !self.ty.is_volatile
    }

    pub fn is_local(&self) -> bool {
        self.function.is_some() && matches!(self.storage, Storage::Automatic | Storage::Static)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionInfo {
    pub name: String,
    pub symbol: SymbolId,
    pub params: Vec<SymbolId>,
    pub locals: Vec<SymbolId>,
}

/// A unit with every identifier resolved and every expression typed.
#[derive(Debug, Clone)]
pub struct TypedUnit {
    pub ast: TranslationUnit,
    pub pre: Preprocessed,
    pub profile: LibcProfile,
    pub symbols: Vec<Symbol>,
    pub records: Vec<RecordDef>,
    pub functions: Vec<FunctionInfo>,
    expr_types: Vec<Option<TypeRepr>>,
    /// Implicit conversions: the type an expression's value is converted to
    /// where it is used, when that differs from its own type.
    pub conversions: BTreeMap<ExprId, TypeRepr>,
    ident_symbols: Vec<Option<SymbolId>>,
    declarator_symbols: HashMap<DeclaratorId, SymbolId>,
    sizeof_values: HashMap<ExprId, u64>,
}

impl TypedUnit {
    /// Type of `e` before any implicit conversion at its use site.
    pub fn expr_type(&self, e: &Expr) -> &TypeRepr {
        self.expr_types[e.id.index()].as_ref().expect("every expression is typed")
    }

    pub fn try_expr_type(&self, e: &Expr) -> Option<&TypeRepr> {
        self.expr_types.get(e.id.index()).and_then(Option::as_ref)
    }

    /// Type of `e` after array/function decay but before other conversions.
    pub fn operand_type(&self, e: &Expr) -> TypeRepr {
        self.expr_type(e).decay()
    }

    /// Type of the value of `e` as consumed by its parent.
    pub fn converted_type(&self, e: &Expr) -> TypeRepr {
        self.conversions.get(&e.id).cloned().unwrap_or_else(|| self.operand_type(e))
    }

    pub fn symbol(&self, id: SymbolId) -> &Symbol {
        &self.symbols[id.index()]
    }

    /// The symbol an identifier expression refers to.
    pub fn symbol_id_of(&self, e: &Expr) -> Option<SymbolId> {
        self.ident_symbols.get(e.id.index()).copied().flatten()
    }

    pub fn symbol_of(&self, e: &Expr) -> Option<&Symbol> {
        self.symbol_id_of(e).map(|id| self.symbol(id))
    }

    pub fn declarator_symbol(&self, d: DeclaratorId) -> Option<SymbolId> {
        self.declarator_symbols.get(&d).copied()
    }

    pub fn sizeof_value(&self, e: &Expr) -> Option<u64> {
        self.sizeof_values.get(&e.id).copied()
    }

    pub fn function_info(&self, name: &str) -> Option<&FunctionInfo> {
        self.functions.iter().find(|f| f.name == name)
    }

    /// File-scope symbol by name.
    pub fn global(&self, name: &str) -> Option<&Symbol> {
        self.symbols.iter().find(|s| s.name == name && s.function.is_none() && s.storage != Storage::Enumerator)
    }

    /// Library tag of the function called by `call`, if it is a direct call
    /// to a profile function.
    pub fn callee_tag(&self, call: &Expr) -> Option<LibcTag> {
        self.direct_callee(call).and_then(|s| s.libc_tag)
    }

    /// Symbol of the function called by `call` when called by name.
    pub fn direct_callee(&self, call: &Expr) -> Option<&Symbol> {
        match &call.kind {
            ExprKind::Call { callee, .. } => self.symbol_of(callee).filter(|s| s.storage == Storage::Function),
            _ => None,
        }
    }

    /// Integer constant value of `e`, counting enumerators and (when
    /// `const_locals` is set) const-qualified locals with constant
    /// initializers.
    pub fn const_value(&self, e: &Expr, const_locals: bool) -> Result<i128, ConstError> {
        consteval::eval(&UnitEnv { unit: self, const_locals }, e)
    }

    pub fn records(&self) -> &[RecordDef] {
        &self.records
    }

    pub fn type_name(&self, t: &TypeRepr) -> String {
        t.display(&self.records)
    }

    pub fn file_name(&self, span: SourceSpan) -> &str {
        self.pre.sources.name(span.file)
    }
}

struct UnitEnv<'a> {
    unit: &'a TypedUnit,
    const_locals: bool,
}

impl ConstEnv for UnitEnv<'_> {
    fn expr_type(&self, e: &Expr) -> Option<TypeRepr> {
        self.unit.try_expr_type(e).cloned()
    }

    fn ident_value(&self, e: &Expr) -> Option<i128> {
        let s = self.unit.symbol_of(e)?;
        s.enum_value.or(if self.const_locals { s.const_value } else { None })
    }

    fn sizeof_value(&self, e: &Expr) -> Option<u64> {
        self.unit.sizeof_value(e)
    }
}

#[derive(Clone, Copy)]
enum TagRef {
    Record(RecordId),
    Enum,
}

#[derive(Default)]
struct Scope {
    ordinary: HashMap<String, SymbolId>,
    tags: HashMap<String, TagRef>,
}

struct Resolver<'p> {
    profile: &'p LibcProfile,
    symbols: Vec<Symbol>,
    records: Vec<RecordDef>,
    functions: Vec<FunctionInfo>,
    scopes: Vec<Scope>,
    expr_types: Vec<Option<TypeRepr>>,
    conversions: BTreeMap<ExprId, TypeRepr>,
    ident_symbols: Vec<Option<SymbolId>>,
    declarator_symbols: HashMap<DeclaratorId, SymbolId>,
    sizeof_values: HashMap<ExprId, u64>,
    in_prelude: bool,
    current_fn: Option<(String, TypeRepr)>,
    current_locals: Vec<SymbolId>,
}

type R<T> = Result<T, SemaError>;

fn err<T>(span: SourceSpan, message: impl Into<String>) -> R<T> {
    Err(SemaError::new(span, message))
}

/// Resolve names and type every expression of `ast`. `prelude` is the
/// parsed library profile declarations.
pub fn resolve_and_type(
    ast: TranslationUnit,
    pre: Preprocessed,
    prelude: &TranslationUnit,
    profile: &LibcProfile,
) -> Result<TypedUnit, SemaError> {
    let n = ast.expr_count as usize;
    let mut r = Resolver {
        profile,
        symbols: Vec::new(),
        records: Vec::new(),
        functions: Vec::new(),
        scopes: vec![Scope::default()],
        expr_types: vec![None; n],
        conversions: BTreeMap::new(),
        ident_symbols: vec![None; n],
        declarator_symbols: HashMap::new(),
        sizeof_values: HashMap::new(),
        in_prelude: true,
        current_fn: None,
        current_locals: Vec::new(),
    };
    let builtin_span = prelude
        .items
        .first()
        .map(|i| match i {
            ExternalDecl::Declaration(d) => d.span,
            ExternalDecl::Function(f) => f.span,
        })
        .unwrap_or(SourceSpan::new(pre.main_file, 1, 1, 0));
    for (name, ty) in &profile.typedefs {
        let id = r.new_symbol(name, builtin_span, Storage::TypedefName, ty.clone());
        r.symbols[id.index()].libc_tag = profile.tag(name);
        r.bind(name, id);
    }
    for item in &prelude.items {
        r.external(item)?;
    }
    r.in_prelude = false;
    for item in &ast.items {
        r.external(item)?;
    }
    Ok(TypedUnit {
        ast,
        pre,
        profile: profile.clone(),
        symbols: r.symbols,
        records: r.records,
        functions: r.functions,
        expr_types: r.expr_types,
        conversions: r.conversions,
        ident_symbols: r.ident_symbols,
        declarator_symbols: r.declarator_symbols,
        sizeof_values: r.sizeof_values,
    })
}

impl ConstEnv for Resolver<'_> {
    fn expr_type(&self, e: &Expr) -> Option<TypeRepr> {
        self.expr_types.get(e.id.index()).cloned().flatten()
    }

    fn ident_value(&self, e: &Expr) -> Option<i128> {
        let id = self.ident_symbols.get(e.id.index()).copied().flatten()?;
        self.symbols[id.index()].enum_value
    }

    fn sizeof_value(&self, e: &Expr) -> Option<u64> {
        self.sizeof_values.get(&e.id).copied()
    }
}

impl<'p> Resolver<'p> {
    // ---- symbols and scopes ----

    fn new_symbol(&mut self, name: &str, span: SourceSpan, storage: Storage, ty: TypeRepr) -> SymbolId {
        let id = SymbolId(self.symbols.len() as u32);
        let function = if self.scopes.len() > 1 { self.current_fn.as_ref().map(|(n, _)| n.clone()) } else { None };
        self.symbols.push(Symbol {
            id,
            name: name.to_string(),
            decl_span: span,
            storage,
            ty,
            libc_tag: None,
            is_parameter: false,
            address_taken: false,
            function,
            defined: false,
            enum_value: None,
            const_value: None,
            builtin: self.in_prelude,
        });
        if self.in_prelude {
            self.symbols[id.index()].libc_tag = self.profile.tag(name);
        }
        if self.scopes.len() > 1 && self.current_fn.is_some() {
            self.current_locals.push(id);
        }
        id
    }

    fn bind(&mut self, name: &str, id: SymbolId) {
        self.scopes.last_mut().expect("scope").ordinary.insert(name.to_string(), id);
    }

    fn lookup(&self, name: &str) -> Option<SymbolId> {
        self.scopes.iter().rev().find_map(|s| s.ordinary.get(name).copied())
    }

    fn lookup_tag(&self, name: &str) -> Option<TagRef> {
        self.scopes.iter().rev().find_map(|s| s.tags.get(name).copied())
    }

    fn push(&mut self) {
        self.scopes.push(Scope::default());
    }

    fn pop(&mut self) {
        self.scopes.pop();
    }

    fn record_decl(&mut self, d: &Declarator, id: SymbolId) {
        if !self.in_prelude {
            self.declarator_symbols.insert(d.id, id);
        }
    }

    fn set_type(&mut self, e: &Expr, t: TypeRepr) -> TypeRepr {
        if !self.in_prelude {
            self.expr_types[e.id.index()] = Some(t.clone());
        }
        t
    }

    fn convert(&mut self, e: &Expr, to: &TypeRepr) {
        if self.in_prelude {
            return;
        }
        let from = self.expr_types[e.id.index()].as_ref().map(TypeRepr::decay);
        let to = to.unqualified();
        if from.as_ref() != Some(&to) && !to.is_void() {
            self.conversions.insert(e.id, to);
        }
    }

    fn const_int(&self, e: &Expr, what: &str) -> R<i128> {
        match consteval::eval(self, e) {
            Ok(v) => Ok(v),
            Err(ConstError::NotConstant) => err(e.span, format!("{what} is not an integer constant expression")),
            Err(ConstError::Invalid { span, message }) => err(span, message),
        }
    }

    // ---- types ----

    fn base_type(&mut self, specs: &DeclSpecs) -> R<TypeRepr> {
        use IntKind::*;
        let kind = match &specs.ty {
            TypeSpec::Void => TypeKind::Void,
            TypeSpec::Bool => TypeKind::Int(Bool),
            TypeSpec::Char => TypeKind::Int(Char),
            TypeSpec::SChar => TypeKind::Int(SChar),
            TypeSpec::UChar => TypeKind::Int(UChar),
            TypeSpec::Short => TypeKind::Int(Short),
            TypeSpec::UShort => TypeKind::Int(UShort),
            TypeSpec::Int => TypeKind::Int(Int),
            TypeSpec::UInt => TypeKind::Int(UInt),
            TypeSpec::Long => TypeKind::Int(Long),
            TypeSpec::ULong => TypeKind::Int(ULong),
            TypeSpec::LongLong => TypeKind::Int(LongLong),
            TypeSpec::ULongLong => TypeKind::Int(ULongLong),
            TypeSpec::Float => TypeKind::Float(32),
            TypeSpec::Double => TypeKind::Float(64),
            TypeSpec::LongDouble => TypeKind::Float(128),
            TypeSpec::Named(n) => {
                let Some(id) = self.lookup(n).filter(|id| self.symbols[id.index()].storage == Storage::TypedefName) else {
                    return err(specs.span, format!("unknown type name '{n}'"));
                };
                let t = self.symbols[id.index()].ty.clone();
                return Ok(t.with_quals(specs.quals.is_const, specs.quals.is_volatile));
            }
            TypeSpec::Record(rs) => TypeKind::Record(self.record_type(rs)?),
            TypeSpec::Enum(es) => self.enum_type(es)?,
        };
        Ok(TypeRepr::from(kind).with_quals(specs.quals.is_const, specs.quals.is_volatile))
    }

    fn record_type(&mut self, rs: &RecordSpec) -> R<RecordId> {
        let id = match (&rs.tag, &rs.fields) {
            (Some(tag), None) => match self.lookup_tag(tag) {
                Some(TagRef::Record(id)) => return Ok(id),
                Some(TagRef::Enum) => return err(rs.span, format!("'{tag}' is an enum tag")),
                None => {
                    let id = self.new_record(Some(tag.clone()), rs.is_union);
                    self.scopes.last_mut().expect("scope").tags.insert(tag.clone(), TagRef::Record(id));
                    return Ok(id);
                }
            },
            (Some(tag), Some(_)) => {
                let existing = self.scopes.last().expect("scope").tags.get(tag).copied();
                match existing {
                    Some(TagRef::Record(id)) if self.records[id.0 as usize].members.is_none() => id,
                    Some(_) => return err(rs.span, format!("redefinition of '{tag}'")),
                    None => {
                        let id = self.new_record(Some(tag.clone()), rs.is_union);
                        self.scopes.last_mut().expect("scope").tags.insert(tag.clone(), TagRef::Record(id));
                        id
                    }
                }
            }
            (None, _) => self.new_record(None, rs.is_union),
        };
        let mut members = Vec::new();
        for fd in rs.fields.as_deref().unwrap_or_default() {
            let base = self.base_type(&fd.specs)?;
            for d in &fd.declarators {
                let ty = self.declarator_type(base.clone(), d, false)?;
                let name = d.name.as_ref().map(|n| n.name.clone()).unwrap_or_default();
                if ty.size(&self.records).is_none() {
                    return err(d.span, format!("field '{name}' has incomplete type"));
                }
                if members.iter().any(|m: &Member| m.name == name) {
                    return err(d.span, format!("duplicate member '{name}'"));
                }
                members.push(Member { name, ty });
            }
        }
        self.records[id.0 as usize].members = Some(members);
        Ok(id)
    }

    fn new_record(&mut self, tag: Option<String>, is_union: bool) -> RecordId {
        let id = RecordId(self.records.len() as u32);
        self.records.push(RecordDef { tag, is_union, members: None });
        id
    }

    fn enum_type(&mut self, es: &EnumSpec) -> R<TypeKind> {
        if let Some(tag) = &es.tag {
            if es.enumerators.is_none() {
                return match self.lookup_tag(tag) {
                    Some(TagRef::Enum) | None => Ok(TypeKind::Enum(Some(tag.clone()))),
                    Some(TagRef::Record(_)) => err(es.span, format!("'{tag}' is not an enum tag")),
                };
            }
            self.scopes.last_mut().expect("scope").tags.insert(tag.clone(), TagRef::Enum);
        }
        let mut next: i128 = 0;
        for en in es.enumerators.as_deref().unwrap_or_default() {
            let value = match &en.value {
                Some(v) => {
                    self.expr(v)?;
                    self.const_int(v, "enumerator value")?
                }
                None => next,
            };
            if !IntKind::Int.fits(value) {
                return err(en.name.span, format!("enumerator value {value} does not fit in int"));
            }
            let id = self.new_symbol(&en.name.name, en.name.span, Storage::Enumerator, TypeRepr::int(IntKind::Int));
            self.symbols[id.index()].enum_value = Some(value);
            self.symbols[id.index()].defined = true;
            self.bind(&en.name.name, id);
            next = value + 1;
        }
        Ok(TypeKind::Enum(es.tag.clone()))
    }

    /// Apply a declarator's derivations to `base`. Parameter lists become
    /// `Param`s; when `is_param` is set, array and function types adjust to
    /// pointers.
    fn declarator_type(&mut self, base: TypeRepr, d: &Declarator, is_param: bool) -> R<TypeRepr> {
        let mut t = base;
        for der in d.derived.iter().rev() {
            t = match der {
                Derived::Pointer(q) => TypeRepr::pointer_to(t).with_quals(q.is_const, q.is_volatile),
                Derived::Array(size) => {
                    if t.is_function() {
                        return err(d.span, "array of functions");
                    }
                    let len = match size {
                        Some(e) => {
                            self.expr(e)?;
                            let v = match consteval::eval(self, e) {
                                Ok(v) => v,
                                Err(ConstError::NotConstant) => {
                                    return err(e.span, "variable length array is outside the MiniC subset");
                                }
                                Err(ConstError::Invalid { span, message }) => return err(span, message),
                            };
                            if v <= 0 {
                                return err(e.span, "array size must be positive");
                            }
                            Some(v as u64)
                        }
                        None => None,
                    };
                    if t.size(&self.records).is_none() {
                        return err(d.span, "array has incomplete element type");
                    }
                    TypeKind::Array(Box::new(t), len).into()
                }
                Derived::Function { params, variadic, prototype } => {
                    if t.is_array() || t.is_function() {
                        return err(d.span, "function cannot return an array or function");
                    }
                    self.push();
                    let mut ps = Vec::new();
                    for p in params {
                        let base = self.base_type(&p.specs)?;
                        let pt = self.declarator_type(base, &p.declarator, true)?;
                        if pt.is_void() {
                            return err(p.span, "parameter has void type");
                        }
                        ps.push(Param { name: p.declarator.name.as_ref().map(|n| n.name.clone()), ty: pt });
                    }
                    self.pop();
                    TypeKind::Function { ret: Box::new(t), params: ps, variadic: *variadic, prototype: *prototype }.into()
                }
            };
        }
        if is_param {
            t = match &t.kind {
                TypeKind::Array(elem, _) => TypeRepr::pointer_to((**elem).clone()),
                TypeKind::Function { .. } => TypeRepr::pointer_to(t),
                _ => t,
            };
        }
        Ok(t)
    }

    fn type_name(&mut self, tn: &TypeName) -> R<TypeRepr> {
        let base = self.base_type(&tn.specs)?;
        self.declarator_type(base, &tn.declarator, false)
    }

    // ---- declarations ----

    fn external(&mut self, item: &ExternalDecl) -> R<()> {
        match item {
            ExternalDecl::Declaration(d) => self.declaration(d, true),
            ExternalDecl::Function(f) => self.function(f),
        }
    }

    fn function(&mut self, f: &FunctionDef) -> R<()> {
        let base = self.base_type(&f.specs)?;
        let ty = self.declarator_type(base, &f.declarator, false)?;
        let name_ident = f.declarator.name.as_ref().expect("function name");
        let name = name_ident.name.clone();
        let sym = self.declare_file_scope(&name, name_ident.span, Storage::Function, ty.clone(), &f.declarator)?;
        if self.symbols[sym.index()].defined {
            return err(name_ident.span, format!("redefinition of function '{name}'"));
        }
        {
            let s = &mut self.symbols[sym.index()];
            s.defined = true;
            s.decl_span = name_ident.span;
            s.ty = ty.clone();
            if f.specs.storage == Some(StorageClass::Static) {
                s.storage = Storage::Function;
            }
        }
        let TypeKind::Function { ret, params: ptypes, .. } = &ty.kind else { unreachable!() };
        if ret.size(&self.records).is_none() && !ret.is_void() {
            return err(f.span, "function returns an incomplete type");
        }
        self.current_fn = Some((name.clone(), (**ret).clone()));
        self.current_locals.clear();
        self.push();
        let mut params = Vec::new();
        for (p, pt) in f.params().iter().zip(ptypes) {
            let Some(pn) = &p.declarator.name else {
                return err(p.span, "parameter name omitted in function definition");
            };
            let id = self.new_symbol(&pn.name, pn.span, Storage::Automatic, pt.ty.clone());
            self.symbols[id.index()].is_parameter = true;
            self.symbols[id.index()].defined = true;
            self.record_decl(&p.declarator, id);
            self.bind(&pn.name, id);
            params.push(id);
        }
        let StmtKind::Compound(items) = &f.body.kind else { unreachable!() };
        for s in items {
            self.stmt(s)?;
        }
        self.pop();
        let locals = std::mem::take(&mut self.current_locals)
            .into_iter()
            .filter(|id| {
                let s = &self.symbols[id.index()];
                !s.is_parameter && matches!(s.storage, Storage::Automatic | Storage::Static)
            })
            .collect();
        self.current_fn = None;
        if !self.in_prelude {
            self.functions.push(FunctionInfo { name, symbol: sym, params, locals });
        }
        Ok(())
    }

    fn declare_file_scope(&mut self, name: &str, span: SourceSpan, storage: Storage, ty: TypeRepr, d: &Declarator) -> R<SymbolId> {
        if let Some(id) = self.scopes[0].ordinary.get(name).copied() {
            let existing = &self.symbols[id.index()];
            let both_functions = existing.storage == Storage::Function && storage == Storage::Function;
            let both_objects = existing.storage != Storage::Function
                && storage != Storage::Function
                && !matches!(existing.storage, Storage::TypedefName | Storage::Enumerator);
            if !(both_functions || both_objects) {
                return err(span, format!("'{name}' redeclared as a different kind of symbol"));
            }
            if both_objects && matches!(existing.ty.kind, TypeKind::Array(_, None)) && ty.is_array() {
                self.symbols[id.index()].ty = ty;
            }
            self.record_decl(d, id);
            return Ok(id);
        }
        let id = self.new_symbol(name, span, storage, ty);
        self.scopes[0].ordinary.insert(name.to_string(), id);
        self.record_decl(d, id);
        Ok(id)
    }

    fn declaration(&mut self, decl: &Declaration, file_scope: bool) -> R<()> {
        let base = self.base_type(&decl.specs)?;
        for id in &decl.declarators {
            let d = &id.declarator;
            let Some(name) = &d.name else {
                return err(d.span, "declaration requires a name");
            };
            let mut ty = self.declarator_type(base.clone(), d, false)?;
            if decl.specs.storage == Some(StorageClass::Typedef) {
                if self.scopes.last().expect("scope").ordinary.contains_key(&name.name) && !file_scope {
                    return err(name.span, format!("redefinition of '{}'", name.name));
                }
                let sid = self.new_symbol(&name.name, name.span, Storage::TypedefName, ty);
                self.record_decl(d, sid);
                self.bind(&name.name, sid);
                continue;
            }
            if let Some(init) = &id.init {
                ty = self.complete_from_initializer(ty, init)?;
            }
            let storage = if ty.is_function() {
                Storage::Function
            } else {
                match (decl.specs.storage, file_scope) {
                    (Some(StorageClass::Static), _) => Storage::Static,
                    (Some(StorageClass::Extern), _) | (_, true) => Storage::Extern,
                    _ => Storage::Automatic,
                }
            };
            if ty.is_void() {
                return err(name.span, format!("variable '{}' has void type", name.name));
            }
            let needs_size = storage != Storage::Function
                && !(storage == Storage::Extern && id.init.is_none())
                && !(file_scope && id.init.is_none() && ty.is_array());
            // Objects of the opaque FILE type may be declared (the by-value
            // copy is what the dereference check looks for) but not sized.
            let opaque = matches!(ty.kind, TypeKind::Opaque(_));
            if needs_size && !opaque && ty.size(&self.records).is_none() {
                return err(name.span, format!("variable '{}' has incomplete type '{}'", name.name, ty.display(&self.records)));
            }
            let sid = if file_scope || storage == Storage::Function {
                let sid = self.declare_file_scope(&name.name, name.span, storage, ty.clone(), d)?;
                if !file_scope {
                    self.bind(&name.name, sid);
                }
                sid
            } else {
                if self.scopes.last().expect("scope").ordinary.contains_key(&name.name) {
                    return err(name.span, format!("redefinition of '{}'", name.name));
                }
                let sid = self.new_symbol(&name.name, name.span, storage, ty.clone());
                self.record_decl(d, sid);
                self.bind(&name.name, sid);
                sid
            };
            if let Some(init) = &id.init {
                if storage == Storage::Function {
                    return err(name.span, "function cannot have an initializer");
                }
                self.initializer(init, &ty)?;
                self.symbols[sid.index()].defined = true;
                if storage == Storage::Automatic && ty.is_const && !ty.is_volatile && ty.is_integer() {
                    if let Initializer::Expr(e) = init {
                        if let Ok(v) = consteval::eval(self, e) {
                            let k = ty.int_kind().expect("integer");
                            self.symbols[sid.index()].const_value = Some(k.wrap(v));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn complete_from_initializer(&mut self, ty: TypeRepr, init: &Initializer) -> R<TypeRepr> {
        if let TypeKind::Array(elem, None) = &ty.kind {
            let n = match init {
                Initializer::List { items, .. } => items.len() as u64,
                Initializer::Expr(Expr { kind: ExprKind::StrLit(bytes), .. }) => bytes.len() as u64 + 1,
                Initializer::Expr(e) => return err(e.span, "array initializer must be a list"),
            };
            if n == 0 {
                return err(ty_span(init), "array size must be positive");
            }
            return Ok(TypeRepr { kind: TypeKind::Array(elem.clone(), Some(n)), ..ty });
        }
        Ok(ty)
    }

    fn initializer(&mut self, init: &Initializer, ty: &TypeRepr) -> R<()> {
        match init {
            Initializer::Expr(e) => {
                let et = self.expr(e)?;
                if let TypeKind::Array(elem, n) = &ty.kind {
                    if let ExprKind::StrLit(bytes) = &e.kind {
                        if elem.is_integer() && elem.int_kind().map(|k| k.bits()) == Some(8) {
                            if let Some(n) = n {
                                if bytes.len() as u64 > *n {
                                    return err(e.span, "initializer string is too long");
                                }
                            }
                            return Ok(());
                        }
                    }
                    return err(e.span, "array initializer must be a list");
                }
                if matches!(ty.kind, TypeKind::Record(_)) {
                    if et.unqualified() != ty.unqualified() {
                        return err(e.span, "incompatible record initializer");
                    }
                    return Ok(());
                }
                self.check_assignable(ty, e)?;
                self.convert(e, ty);
                Ok(())
            }
            Initializer::List { items, span } => match &ty.kind {
                TypeKind::Array(elem, n) => {
                    if let Some(n) = n {
                        if items.len() as u64 > *n {
                            return err(*span, "excess elements in array initializer");
                        }
                    }
                    for it in items {
                        self.initializer(it, elem)?;
                    }
                    Ok(())
                }
                TypeKind::Record(rid) => {
                    let members = self.records[rid.0 as usize].members.clone().unwrap_or_default();
                    let limit = if self.records[rid.0 as usize].is_union { 1 } else { members.len() };
                    if items.len() > limit {
                        return err(*span, "excess elements in record initializer");
                    }
                    for (it, m) in items.iter().zip(members) {
                        self.initializer(it, &m.ty)?;
                    }
                    Ok(())
                }
                _ => {
                    if items.len() != 1 {
                        return err(*span, "scalar initializer must have exactly one element");
                    }
                    self.initializer(&items[0], ty)
                }
            },
        }
    }

    // ---- statements ----

    fn stmt(&mut self, s: &Stmt) -> R<()> {
        match &s.kind {
            StmtKind::Compound(items) => {
                self.push();
                for i in items {
                    self.stmt(i)?;
                }
                self.pop();
            }
            StmtKind::Decl(d) => self.declaration(d, false)?,
            StmtKind::Expr(Some(e)) => {
                self.expr(e)?;
            }
            StmtKind::Expr(None) | StmtKind::Goto(_) | StmtKind::Continue | StmtKind::Break => {}
            StmtKind::If { cond, then, els } => {
                self.condition(cond)?;
                self.stmt(then)?;
                if let Some(e) = els {
                    self.stmt(e)?;
                }
            }
            StmtKind::Switch { cond, body } => {
                let t = self.expr(cond)?;
                if !t.is_integer() {
                    return err(cond.span, "switch condition must have integer type");
                }
                self.convert(cond, &t.promote());
                self.stmt(body)?;
            }
            StmtKind::While { cond, body } | StmtKind::DoWhile { body, cond } => {
                self.condition(cond)?;
                self.stmt(body)?;
            }
            StmtKind::For { init, cond, step, body } => {
                self.push();
                if let Some(i) = init {
                    self.stmt(i)?;
                }
                if let Some(c) = cond {
                    self.condition(c)?;
                }
                if let Some(st) = step {
                    self.stmt(st)?;
                }
                self.stmt(body)?;
                self.pop();
            }
            StmtKind::Return(v) => {
                let ret = self.current_fn.as_ref().map(|(_, r)| r.clone()).unwrap_or_else(TypeRepr::void);
                match v {
                    Some(e) => {
                        self.expr(e)?;
                        if ret.is_void() {
                            return err(e.span, "void function should not return a value");
                        }
                        self.check_assignable(&ret, e)?;
                        self.convert(e, &ret);
                    }
                    None if !ret.is_void() => return err(s.span, "non-void function should return a value"),
                    None => {}
                }
            }
            StmtKind::Labeled { body, .. } | StmtKind::Default { body } => self.stmt(body)?,
            StmtKind::Case { value, body } => {
                self.expr(value)?;
                self.const_int(value, "case label")?;
                self.stmt(body)?;
            }
        }
        Ok(())
    }

    fn condition(&mut self, e: &Expr) -> R<()> {
        let t = self.expr(e)?.decay();
        if !t.is_scalar() {
            return err(e.span, "controlling expression must have scalar type");
        }
        Ok(())
    }

    // ---- expressions ----

    fn rvalue(&mut self, e: &Expr) -> R<TypeRepr> {
        Ok(self.expr(e)?.decay())
    }

    fn mark_address_taken(&mut self, e: &Expr) {
        match &e.kind {
            ExprKind::Ident(_) => {
                if let Some(id) = self.ident_symbols.get(e.id.index()).copied().flatten() {
                    self.symbols[id.index()].address_taken = true;
                }
            }
            ExprKind::Member { base, arrow: false, .. } => self.mark_address_taken(base),
            ExprKind::Index { base, .. }
                if self.expr_types[base.id.index()].as_ref().is_some_and(TypeRepr::is_array) => {
                    self.mark_address_taken(base);
                }
            _ => {}
        }
    }

    fn is_null_constant(&self, e: &Expr) -> bool {
        let stripped = match &e.kind {
            ExprKind::Cast { expr, .. }
                if self.expr_types[e.id.index()].as_ref().and_then(|t| t.pointee()).is_some_and(TypeRepr::is_void) =>
            {
                expr
            }
            _ => e,
        };
        self.expr_types[stripped.id.index()].as_ref().is_some_and(TypeRepr::is_integer)
            && consteval::eval(self, stripped) == Ok(0)
    }

    fn check_assignable(&self, target: &TypeRepr, e: &Expr) -> R<()> {
        let Some(src) = self.expr_types[e.id.index()].as_ref().map(TypeRepr::decay) else { return Ok(()) };
        let ok = match (&target.kind, &src.kind) {
            _ if target.is_arithmetic() && src.is_arithmetic() => true,
            (TypeKind::Pointer(_), TypeKind::Pointer(_)) => true,
            (TypeKind::Pointer(_), _) if src.is_integer() => self.is_null_constant(e),
            (TypeKind::Int(IntKind::Bool), TypeKind::Pointer(_)) => true,
            (TypeKind::Record(a), TypeKind::Record(b)) => a == b,
            (TypeKind::Opaque(a), TypeKind::Opaque(b)) => a == b,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            err(
                e.span,
                format!(
                    "incompatible types: cannot convert '{}' to '{}'",
                    src.display(&self.records),
                    target.display(&self.records)
                ),
            )
        }
    }

    fn expr(&mut self, e: &Expr) -> R<TypeRepr> {
        let t = self.expr_inner(e)?;
        Ok(self.set_type(e, t))
    }

    fn expr_inner(&mut self, e: &Expr) -> R<TypeRepr> {
        use IntKind::*;
        Ok(match &e.kind {
            ExprKind::Ident(name) => {
                let Some(id) = self.lookup(name) else {
                    return err(e.span, format!("use of undeclared identifier '{name}'"));
                };
                let s = &self.symbols[id.index()];
                if s.storage == Storage::TypedefName {
                    return err(e.span, format!("unexpected type name '{name}'"));
                }
                if !self.in_prelude {
                    self.ident_symbols[e.id.index()] = Some(id);
                }
                s.ty.clone()
            }
            ExprKind::IntLit { value, unsigned, long, decimal } => TypeRepr::int(literal_kind(*value, *unsigned, *long, *decimal)),
            ExprKind::FloatLit { single, .. } => TypeKind::Float(if *single { 32 } else { 64 }).into(),
            ExprKind::CharLit(_) => TypeRepr::int(Int),
            ExprKind::StrLit(bytes) => TypeKind::Array(Box::new(TypeRepr::int(Char)), Some(bytes.len() as u64 + 1)).into(),
            ExprKind::Unary { op, operand } => self.unary(e, *op, operand)?,
            ExprKind::Binary { op, lhs, rhs } => self.binary(e, *op, lhs, rhs)?,
            ExprKind::Assign { op, lhs, rhs } => {
                let lt = self.expr(lhs)?;
                let rt = self.rvalue(rhs)?;
                if lt.is_array() {
                    return err(e.span, "assignment to array type");
                }
                if !is_lvalue(lhs) {
                    return err(lhs.span, "expression is not assignable");
                }
                if lt.is_const {
                    return err(lhs.span, "cannot assign to a const-qualified object");
                }
                match op {
                    None => {
                        self.check_assignable(&lt, rhs)?;
                        self.convert(rhs, &lt);
                    }
                    Some(bop) => {
                        if lt.is_pointer() && matches!(bop, BinaryOp::Add | BinaryOp::Sub) {
                            if !rt.is_integer() {
                                return err(rhs.span, "pointer arithmetic needs an integer operand");
                            }
                        } else if !(lt.is_arithmetic() && rt.is_arithmetic()) {
                            return err(e.span, format!("invalid operands to '{}='", bop.symbol()));
                        } else if matches!(bop, BinaryOp::Shl | BinaryOp::Shr) {
                            self.convert(rhs, &rt.promote());
                        } else {
                            let common = usual_arithmetic(&lt, &rt);
                            self.convert(rhs, &common);
                        }
                    }
                }
                lt.unqualified()
            }
            ExprKind::Conditional { cond, then, els } => {
                self.condition(cond)?;
                let a = self.rvalue(then)?;
                let b = self.rvalue(els)?;
                if a.is_arithmetic() && b.is_arithmetic() {
                    let c = usual_arithmetic(&a, &b);
                    self.convert(then, &c);
                    self.convert(els, &c);
                    c
                } else if a.is_pointer() && b.is_pointer() {
                    if a.pointee().is_some_and(TypeRepr::is_void) && self.is_null_constant(then) {
                        b
                    } else {
                        a
                    }
                } else if a.is_pointer() && self.is_null_constant(els) {
                    a
                } else if b.is_pointer() && self.is_null_constant(then) {
                    b
                } else if a.unqualified() == b.unqualified() {
                    a.unqualified()
                } else {
                    return err(e.span, "incompatible operand types in conditional expression");
                }
            }
            ExprKind::Comma { lhs, rhs } => {
                self.expr(lhs)?;
                self.rvalue(rhs)?
            }
            ExprKind::Call { callee, args } => self.call(e, callee, args)?,
            ExprKind::Cast { ty, expr } => {
                let target = self.type_name(ty)?;
                let src = self.rvalue(expr)?;
                let ok = target.is_void()
                    || (target.is_scalar() && src.is_scalar() && !(target.is_floating() && src.is_pointer())
                        && !(target.is_pointer() && src.is_floating()));
                if !ok {
                    return err(e.span, format!("invalid cast to '{}'", target.display(&self.records)));
                }
                target.unqualified()
            }
            ExprKind::SizeofExpr(inner) => {
                let t = self.expr(inner)?;
                self.sizeof(e, &t)?
            }
            ExprKind::SizeofType(tn) => {
                let t = self.type_name(tn)?;
                self.sizeof(e, &t)?
            }
            ExprKind::Member { base, field, arrow } => {
                let bt = self.rvalue(base)?;
                let rt = if *arrow {
                    match bt.pointee() {
                        Some(p) if bt.is_pointer() => p.clone(),
                        _ => return err(e.span, "member reference base is not a pointer"),
                    }
                } else {
                    self.expr_types[base.id.index()].clone().unwrap_or(bt)
                };
                match &rt.kind {
                    // FILE is opaque: accessing a member is accepted so the
                    // dereference check can see it, and yields int.
                    TypeKind::Opaque(_) => TypeRepr::int(Int),
                    TypeKind::Record(rid) => {
                        let def = &self.records[rid.0 as usize];
                        let Some(members) = &def.members else {
                            return err(e.span, "member access into incomplete type");
                        };
                        let Some(m) = members.iter().find(|m| m.name == field.name) else {
                            return err(field.span, format!("no member named '{}' in '{}'", field.name, rt.display(&self.records)));
                        };
                        m.ty.clone().with_quals(rt.is_const, rt.is_volatile)
                    }
                    _ => return err(e.span, "member reference base is not a structure or union"),
                }
            }
            ExprKind::Index { base, index } => {
                let bt = self.rvalue(base)?;
                let it = self.rvalue(index)?;
                let elem = if bt.is_pointer() && it.is_integer() {
                    bt.pointee().cloned()
                } else if it.is_pointer() && bt.is_integer() {
                    it.pointee().cloned()
                } else {
                    None
                };
                match elem {
                    Some(t) if !t.is_void() && !t.is_function() => t,
                    _ => return err(e.span, "subscripted value is not an array or pointer"),
                }
            }
        })
    }

    fn sizeof(&mut self, e: &Expr, t: &TypeRepr) -> R<TypeRepr> {
        let Some(size) = t.size(&self.records) else {
            return err(e.span, format!("invalid application of sizeof to '{}'", t.display(&self.records)));
        };
        if !self.in_prelude {
            self.sizeof_values.insert(e.id, size);
        }
        Ok(TypeRepr::int(IntKind::ULong))
    }

    fn unary(&mut self, e: &Expr, op: UnaryOp, operand: &Expr) -> R<TypeRepr> {
        Ok(match op {
            UnaryOp::AddrOf => {
                let t = self.expr(operand)?;
                if !is_lvalue(operand) && !t.is_function() {
                    return err(e.span, "cannot take the address of an rvalue");
                }
                self.mark_address_taken(operand);
                TypeRepr::pointer_to(t)
            }
            UnaryOp::Deref => {
                let t = self.rvalue(operand)?;
                match &t.kind {
                    TypeKind::Pointer(p) => (**p).clone(),
                    _ => return err(e.span, "indirection requires a pointer operand"),
                }
            }
            UnaryOp::Neg | UnaryOp::Plus | UnaryOp::BitNot => {
                let t = self.rvalue(operand)?;
                let ok = if op == UnaryOp::BitNot { t.is_integer() } else { t.is_arithmetic() };
                if !ok {
                    return err(e.span, format!("invalid operand to unary '{}'", op.symbol()));
                }
                let p = t.promote();
                self.convert(operand, &p);
                p
            }
            UnaryOp::Not => {
                let t = self.rvalue(operand)?;
                if !t.is_scalar() {
                    return err(e.span, "invalid operand to unary '!'");
                }
                TypeRepr::int(IntKind::Int)
            }
            UnaryOp::PreInc | UnaryOp::PreDec | UnaryOp::PostInc | UnaryOp::PostDec => {
                let t = self.expr(operand)?;
                if !is_lvalue(operand) || t.is_array() {
                    return err(e.span, "expression is not assignable");
                }
                if t.is_const {
                    return err(e.span, "cannot modify a const-qualified object");
                }
                if !t.is_scalar() {
                    return err(e.span, format!("invalid operand to '{}'", op.symbol()));
                }
                t.unqualified()
            }
        })
    }

    fn binary(&mut self, e: &Expr, op: BinaryOp, lhs: &Expr, rhs: &Expr) -> R<TypeRepr> {
        let a = self.rvalue(lhs)?;
        let b = self.rvalue(rhs)?;
        let bad = || err(e.span, format!("invalid operands to binary '{}'", op.symbol()));
        Ok(match op {
            BinaryOp::LogAnd | BinaryOp::LogOr => {
                if !a.is_scalar() || !b.is_scalar() {
                    return bad();
                }
                TypeRepr::int(IntKind::Int)
            }
            BinaryOp::Add | BinaryOp::Sub if a.is_pointer() || b.is_pointer() => {
                if a.is_pointer() && b.is_integer() {
                    a
                } else if op == BinaryOp::Add && a.is_integer() && b.is_pointer() {
                    b
                } else if op == BinaryOp::Sub && a.is_pointer() && b.is_pointer() {
                    TypeRepr::int(IntKind::Long)
                } else {
                    return bad();
                }
            }
            _ if op.is_comparison() => {
                if a.is_arithmetic() && b.is_arithmetic() {
                    let c = usual_arithmetic(&a, &b);
                    self.convert(lhs, &c);
                    self.convert(rhs, &c);
                } else if !(a.is_pointer() && b.is_pointer()
                    || a.is_pointer() && self.is_null_constant(rhs)
                    || b.is_pointer() && self.is_null_constant(lhs))
                {
                    return bad();
                }
                TypeRepr::int(IntKind::Int)
            }
            BinaryOp::Shl | BinaryOp::Shr => {
                if !a.is_integer() || !b.is_integer() {
                    return bad();
                }
                let p = a.promote();
                self.convert(lhs, &p);
                self.convert(rhs, &b.promote());
                p
            }
            BinaryOp::Rem | BinaryOp::BitAnd | BinaryOp::BitOr | BinaryOp::BitXor => {
                if !a.is_integer() || !b.is_integer() {
                    return bad();
                }
                let c = usual_arithmetic(&a, &b);
                self.convert(lhs, &c);
                self.convert(rhs, &c);
                c
            }
            _ => {
                if !a.is_arithmetic() || !b.is_arithmetic() {
                    return bad();
                }
                let c = usual_arithmetic(&a, &b);
                self.convert(lhs, &c);
                self.convert(rhs, &c);
                c
            }
        })
    }

    fn call(&mut self, e: &Expr, callee: &Expr, args: &[Expr]) -> R<TypeRepr> {
        let ct = self.rvalue(callee)?;
        let ft = match &ct.kind {
            TypeKind::Pointer(p) if p.is_function() => (**p).clone(),
            _ => return err(callee.span, "called object is not a function"),
        };
        let TypeKind::Function { ret, params, variadic, prototype } = ft.kind else { unreachable!() };
        let name = callee.as_ident().unwrap_or("function");
        if prototype {
            let arity_ok = if variadic { args.len() >= params.len() } else { args.len() == params.len() };
            if !arity_ok {
                let expect = if variadic { "at least " } else { "" };
                return err(
                    e.span,
                    format!("'{name}' expects {expect}{} argument(s), got {}", params.len(), args.len()),
                );
            }
        }
        for (i, a) in args.iter().enumerate() {
            let at = self.rvalue(a)?;
            match params.get(i).filter(|_| prototype) {
                Some(p) => {
                    self.check_assignable(&p.ty, a)?;
                    self.convert(a, &p.ty);
                }
                None => {
                    let promoted = if matches!(at.kind, TypeKind::Float(32)) { TypeKind::Float(64).into() } else { at.promote() };
                    self.convert(a, &promoted);
                }
            }
        }
        Ok((*ret).clone())
    }
}

fn ty_span(init: &Initializer) -> SourceSpan {
    match init {
        Initializer::Expr(e) => e.span,
        Initializer::List { span, .. } => *span,
    }
}

fn is_lvalue(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Ident(_) | ExprKind::Index { .. } | ExprKind::StrLit(_) => true,
        ExprKind::Unary { op: UnaryOp::Deref, .. } => true,
        ExprKind::Member { base, arrow, .. } => *arrow || is_lvalue(base),
        _ => false,
    }
}

/// Type of an integer constant per the C99 candidate lists.
pub fn literal_kind(value: u64, unsigned: bool, long: bool, decimal: bool) -> IntKind {
    use IntKind::*;
    let candidates: &[IntKind] = match (unsigned, long, decimal) {
        (false, false, true) => &[Int, Long, LongLong],
        (false, false, false) => &[Int, UInt, Long, ULong, LongLong, ULongLong],
        (true, false, _) => &[UInt, ULong, ULongLong],
        (false, true, true) => &[Long, LongLong],
        (false, true, false) => &[Long, ULong, LongLong, ULongLong],
        (true, true, _) => &[ULong, ULongLong],
    };
    candidates.iter().copied().find(|k| k.fits(value as i128)).unwrap_or(ULongLong)
}
