//! Syntax tree for MiniC. Nodes are immutable after parsing; statements,
//! expressions and declarators carry dense per-unit ids so later passes can
//! keep facts in side tables.

use std::fmt;

use serde::Serialize;

use super::span::SourceSpan;
use super::token::MacroOrigin;

macro_rules! id_type {
    ($name:ident) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
        pub struct $name(pub u32);

        impl $name {
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

id_type!(StmtId);
id_type!(ExprId);
id_type!(DeclaratorId);

#[derive(Debug, Clone, PartialEq)]
pub struct Ident {
    pub name: String,
    pub span: SourceSpan,
    pub origin: MacroOrigin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranslationUnit {
    pub items: Vec<ExternalDecl>,
    pub stmt_count: u32,
    pub expr_count: u32,
    pub declarator_count: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExternalDecl {
    Function(FunctionDef),
    Declaration(Declaration),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionDef {
    pub specs: DeclSpecs,
    pub declarator: Declarator,
    pub body: Stmt,
    pub span: SourceSpan,
    /// The closing brace.
    pub end: SourceSpan,
}

impl FunctionDef {
    pub fn name(&self) -> &str {
        self.declarator.name.as_ref().map_or("", |n| n.name.as_str())
    }

    pub fn params(&self) -> &[ParamDecl] {
        match self.declarator.derived.first() {
            Some(Derived::Function { params, .. }) => params,
            _ => &[],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StorageClass {
    Typedef,
    Extern,
    Static,
    Auto,
    Register,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash, Serialize)]
pub struct Qualifiers {
    pub is_const: bool,
    pub is_volatile: bool,
    pub is_restrict: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeclSpecs {
    pub storage: Option<StorageClass>,
    pub quals: Qualifiers,
    pub ty: TypeSpec,
    pub is_inline: bool,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TypeSpec {
    Void,
    Bool,
    Char,
    SChar,
    UChar,
    Short,
    UShort,
    Int,
    UInt,
    Long,
    ULong,
    LongLong,
    ULongLong,
    Float,
    Double,
    LongDouble,
    Record(RecordSpec),
    Enum(EnumSpec),
    Named(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordSpec {
    pub is_union: bool,
    pub tag: Option<String>,
    pub fields: Option<Vec<FieldDecl>>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldDecl {
    pub specs: DeclSpecs,
    pub declarators: Vec<Declarator>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnumSpec {
    pub tag: Option<String>,
    pub enumerators: Option<Vec<Enumerator>>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Enumerator {
    pub id: DeclaratorId,
    pub name: Ident,
    pub value: Option<Expr>,
}

/// A declarator with its derivations listed from the identifier outward:
/// `int *a[3]` gives `[Array(3), Pointer]`, i.e. array of pointers.
#[derive(Debug, Clone, PartialEq)]
pub struct Declarator {
    pub id: DeclaratorId,
    pub name: Option<Ident>,
    pub derived: Vec<Derived>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Derived {
    Pointer(Qualifiers),
    Array(Option<Box<Expr>>),
    Function { params: Vec<ParamDecl>, variadic: bool, prototype: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamDecl {
    pub specs: DeclSpecs,
    pub declarator: Declarator,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeName {
    pub specs: DeclSpecs,
    pub declarator: Declarator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Declaration {
    pub specs: DeclSpecs,
    pub declarators: Vec<InitDeclarator>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitDeclarator {
    pub declarator: Declarator,
    pub init: Option<Initializer>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Initializer {
    Expr(Expr),
    List { items: Vec<Initializer>, span: SourceSpan },
}

impl Initializer {
    pub fn exprs(&self) -> Vec<&Expr> {
        match self {
            Initializer::Expr(e) => vec![e],
            Initializer::List { items, .. } => items.iter().flat_map(Initializer::exprs).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub id: StmtId,
    pub kind: StmtKind,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Compound(Vec<Stmt>),
    Decl(Declaration),
    Expr(Option<Expr>),
    If { cond: Expr, then: Box<Stmt>, els: Option<Box<Stmt>> },
    Switch { cond: Expr, body: Box<Stmt> },
    While { cond: Expr, body: Box<Stmt> },
    DoWhile { body: Box<Stmt>, cond: Expr },
    /// `init` is a declaration or expression statement, `step` an expression
    /// statement; each has its own id so stores there can be traced.
    For { init: Option<Box<Stmt>>, cond: Option<Expr>, step: Option<Box<Stmt>>, body: Box<Stmt> },
    Goto(Ident),
    Continue,
    Break,
    Return(Option<Expr>),
    Labeled { label: Ident, body: Box<Stmt> },
    Case { value: Expr, body: Box<Stmt> },
    Default { body: Box<Stmt> },
}

impl Stmt {
    /// Statements that do something when control reaches them. Compound
    /// blocks, labels and null statements are structure only.
    pub fn is_executable(&self) -> bool {
        !matches!(
            self.kind,
            StmtKind::Compound(_)
                | StmtKind::Expr(None)
                | StmtKind::Labeled { .. }
                | StmtKind::Case { .. }
                | StmtKind::Default { .. }
        )
    }

    /// Direct child statements, in source order.
    pub fn children(&self) -> Vec<&Stmt> {
        match &self.kind {
            StmtKind::Compound(items) => items.iter().collect(),
            StmtKind::If { then, els, .. } => std::iter::once(&**then).chain(els.as_deref()).collect(),
            StmtKind::Switch { body, .. }
            | StmtKind::While { body, .. }
            | StmtKind::DoWhile { body, .. }
            | StmtKind::Labeled { body, .. }
            | StmtKind::Case { body, .. }
            | StmtKind::Default { body } => vec![&**body],
            StmtKind::For { init, step, body, .. } => {
                init.as_deref().into_iter().chain(std::iter::once(&**body)).chain(step.as_deref()).collect()
            }
            _ => Vec::new(),
        }
    }

    /// Expressions evaluated by this statement itself (not its children).
    pub fn own_exprs(&self) -> Vec<&Expr> {
        match &self.kind {
            StmtKind::Decl(d) => d
                .declarators
                .iter()
                .filter_map(|i| i.init.as_ref())
                .flat_map(Initializer::exprs)
                .collect(),
            StmtKind::Expr(Some(e)) | StmtKind::Return(Some(e)) => vec![e],
            StmtKind::If { cond, .. }
            | StmtKind::Switch { cond, .. }
            | StmtKind::While { cond, .. }
            | StmtKind::DoWhile { cond, .. } => vec![cond],
            StmtKind::For { cond, .. } => cond.iter().collect(),
            _ => Vec::new(),
        }
    }

    /// Pre-order walk over this statement and all nested statements.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Stmt)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    /// Whether this statement has a controlling expression that branches.
    pub fn is_condition(&self) -> bool {
        matches!(
            self.kind,
            StmtKind::If { .. } | StmtKind::Switch { .. } | StmtKind::While { .. } | StmtKind::DoWhile { .. } | StmtKind::For { .. }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum UnaryOp {
    Neg,
    Plus,
    Not,
    BitNot,
    Deref,
    AddrOf,
    PreInc,
    PreDec,
    PostInc,
    PostDec,
}

impl UnaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Plus => "+",
            UnaryOp::Not => "!",
            UnaryOp::BitNot => "~",
            UnaryOp::Deref => "*",
            UnaryOp::AddrOf => "&",
            UnaryOp::PreInc | UnaryOp::PostInc => "++",
            UnaryOp::PreDec | UnaryOp::PostDec => "--",
        }
    }

    pub fn is_inc_dec(self) -> bool {
        matches!(self, UnaryOp::PreInc | UnaryOp::PreDec | UnaryOp::PostInc | UnaryOp::PostDec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BinaryOp {
    Mul,
    Div,
    Rem,
    Add,
    Sub,
    Shl,
    Shr,
    Lt,
    Gt,
    Le,
    Ge,
    Eq,
    Ne,
    BitAnd,
    BitXor,
    BitOr,
    LogAnd,
    LogOr,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Rem => "%",
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Shl => "<<",
            BinaryOp::Shr => ">>",
            BinaryOp::Lt => "<",
            BinaryOp::Gt => ">",
            BinaryOp::Le => "<=",
            BinaryOp::Ge => ">=",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::BitAnd => "&",
            BinaryOp::BitXor => "^",
            BinaryOp::BitOr => "|",
            BinaryOp::LogAnd => "&&",
            BinaryOp::LogOr => "||",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(self, BinaryOp::Lt | BinaryOp::Gt | BinaryOp::Le | BinaryOp::Ge | BinaryOp::Eq | BinaryOp::Ne)
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinaryOp::LogAnd | BinaryOp::LogOr)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub id: ExprId,
    pub kind: ExprKind,
    /// Extent from the first token (clipped to one line).
    pub span: SourceSpan,
    /// Macro origin of the principal token (the operator for operations).
    pub origin: MacroOrigin,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Ident(String),
    /// `decimal` matters for the type of unsuffixed constants.
    IntLit { value: u64, unsigned: bool, long: bool, decimal: bool },
    FloatLit { value: f64, single: bool },
    CharLit(i64),
    StrLit(Vec<u8>),
    Unary { op: UnaryOp, operand: Box<Expr> },
    Binary { op: BinaryOp, lhs: Box<Expr>, rhs: Box<Expr> },
    /// `op` is `None` for plain `=`, otherwise the compound operator.
    Assign { op: Option<BinaryOp>, lhs: Box<Expr>, rhs: Box<Expr> },
    Conditional { cond: Box<Expr>, then: Box<Expr>, els: Box<Expr> },
    Comma { lhs: Box<Expr>, rhs: Box<Expr> },
    Call { callee: Box<Expr>, args: Vec<Expr> },
    Cast { ty: Box<TypeName>, expr: Box<Expr> },
    SizeofExpr(Box<Expr>),
    SizeofType(Box<TypeName>),
    Member { base: Box<Expr>, field: Ident, arrow: bool },
    Index { base: Box<Expr>, index: Box<Expr> },
}

impl Expr {
    pub fn children(&self) -> Vec<&Expr> {
        match &self.kind {
            ExprKind::Unary { operand, .. } => vec![operand],
            ExprKind::Binary { lhs, rhs, .. } | ExprKind::Assign { lhs, rhs, .. } | ExprKind::Comma { lhs, rhs } => {
                vec![lhs, rhs]
            }
            ExprKind::Conditional { cond, then, els } => vec![cond, then, els],
            ExprKind::Call { callee, args } => std::iter::once(&**callee).chain(args.iter()).collect(),
            ExprKind::Cast { expr, .. } | ExprKind::SizeofExpr(expr) => vec![expr],
            ExprKind::Member { base, .. } => vec![base],
            ExprKind::Index { base, index } => vec![base, index],
            _ => Vec::new(),
        }
    }

    /// Pre-order walk over this expression and its subexpressions.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    pub fn as_ident(&self) -> Option<&str> {
        match &self.kind {
            ExprKind::Ident(n) => Some(n),
            _ => None,
        }
    }

    /// Whether the node is an operation: an operator or call at its root.
    pub fn is_operation(&self) -> bool {
        !matches!(
            self.kind,
            ExprKind::Ident(_) | ExprKind::IntLit { .. } | ExprKind::FloatLit { .. } | ExprKind::CharLit(_) | ExprKind::StrLit(_)
        )
    }
}

impl TranslationUnit {
    pub fn functions(&self) -> impl Iterator<Item = &FunctionDef> {
        self.items.iter().filter_map(|i| match i {
            ExternalDecl::Function(f) => Some(f),
            _ => None,
        })
    }

    pub fn function(&self, name: &str) -> Option<&FunctionDef> {
        self.functions().find(|f| f.name() == name)
    }

    /// Every statement in the unit, in pre-order.
    pub fn statements(&self) -> Vec<&Stmt> {
        let mut out = Vec::new();
        for f in self.functions() {
            f.body.walk(&mut |s| out.push(s));
        }
        out
    }

    /// Every expression in the unit (including declarator and enumerator
    /// expressions), in pre-order.
    pub fn expressions(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        visit_unit_exprs(self, &mut |e| e.walk(&mut |x| out.push(x)));
        out
    }
}

/// Calls `f` on every root expression in the unit: initializers, array
/// sizes, enumerator values, statement expressions and type-name operands.
pub fn visit_unit_exprs<'a>(tu: &'a TranslationUnit, f: &mut dyn FnMut(&'a Expr)) {
    for item in &tu.items {
        match item {
            ExternalDecl::Function(func) => {
                visit_specs_exprs(&func.specs, f);
                visit_declarator_exprs(&func.declarator, f);
                func.body.walk(&mut |s| visit_stmt_root_exprs(s, f));
            }
            ExternalDecl::Declaration(d) => visit_declaration_exprs(d, f),
        }
    }
}

fn visit_stmt_root_exprs<'a>(s: &'a Stmt, f: &mut dyn FnMut(&'a Expr)) {
    match &s.kind {
        StmtKind::Decl(d) => visit_declaration_exprs(d, f),
        StmtKind::Case { value, .. } => f(value),
        _ => {
            for e in s.own_exprs() {
                f(e);
            }
        }
    }
}

pub fn visit_declaration_exprs<'a>(d: &'a Declaration, f: &mut dyn FnMut(&'a Expr)) {
    visit_specs_exprs(&d.specs, f);
    for i in &d.declarators {
        visit_declarator_exprs(&i.declarator, f);
        if let Some(init) = &i.init {
            for e in init.exprs() {
                f(e);
            }
        }
    }
}

fn visit_specs_exprs<'a>(specs: &'a DeclSpecs, f: &mut dyn FnMut(&'a Expr)) {
    match &specs.ty {
        TypeSpec::Enum(EnumSpec { enumerators: Some(list), .. }) => {
            for e in list {
                if let Some(v) = &e.value {
                    f(v);
                }
            }
        }
        TypeSpec::Record(RecordSpec { fields: Some(fields), .. }) => {
            for fd in fields {
                visit_specs_exprs(&fd.specs, f);
                for d in &fd.declarators {
                    visit_declarator_exprs(d, f);
                }
            }
        }
        _ => {}
    }
}

fn visit_declarator_exprs<'a>(d: &'a Declarator, f: &mut dyn FnMut(&'a Expr)) {
    for der in &d.derived {
        match der {
            Derived::Array(Some(e)) => f(e),
            Derived::Function { params, .. } => {
                for p in params {
                    visit_specs_exprs(&p.specs, f);
                    visit_declarator_exprs(&p.declarator, f);
                }
            }
            _ => {}
        }
    }
}
