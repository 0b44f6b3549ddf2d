//! Recursive-descent parser for MiniC. No error recovery: the first syntax
//! error is fatal.

use std::collections::HashMap;

use super::ast::*;
use super::preprocess::{parse_char_literal, parse_int_literal, parse_string_literal};
use super::span::SourceSpan;
use super::token::{MacroOrigin, Token, TokenKind};
use super::FrontendError;

const OUTSIDE: &str = "is outside the MiniC subset";

/// Parse a preprocessed token stream. `typedef_names` are type names known
/// before the unit starts (the libc profile's `FILE`, `size_t`, ...).
pub fn parse(tokens: &[Token], typedef_names: &[&str]) -> Result<TranslationUnit, FrontendError> {
    let mut p = Parser::new(tokens, typedef_names);
    let mut items = Vec::new();
    while !p.at_end() {
        items.push(p.external_decl()?);
    }
    Ok(TranslationUnit {
        items,
        stmt_count: p.next_stmt,
        expr_count: p.next_expr,
        declarator_count: p.next_decl,
    })
}

/// Parse a single expression (used by tests and the `#if`-free helpers).
pub fn parse_expression(tokens: &[Token], typedef_names: &[&str]) -> Result<Expr, FrontendError> {
    let mut p = Parser::new(tokens, typedef_names);
    let e = p.expr()?;
    if !p.at_end() {
        return Err(p.unexpected("end of expression"));
    }
    Ok(e)
}

#[derive(Clone, Copy, PartialEq)]
enum DeclMode {
    Named,
    Abstract,
    Either,
}

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
    next_stmt: u32,
    next_expr: u32,
    next_decl: u32,
    /// name -> is a typedef name (false: ordinary identifier shadowing one)
    scopes: Vec<HashMap<String, bool>>,
}

impl<'a> Parser<'a> {
    fn new(toks: &'a [Token], typedef_names: &[&str]) -> Self {
        let builtin = typedef_names.iter().map(|n| (n.to_string(), true)).collect();
        Parser { toks, pos: 0, next_stmt: 0, next_expr: 0, next_decl: 0, scopes: vec![builtin, HashMap::new()] }
    }

    // ---- token helpers ----

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn peek(&self) -> Option<&'a Token> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, n: usize) -> Option<&'a Token> {
        self.toks.get(self.pos + n)
    }

    fn cur_span(&self) -> SourceSpan {
        match self.peek().or_else(|| self.toks.last()) {
            Some(t) => t.span,
            None => SourceSpan::new(Default::default(), 1, 1, 0),
        }
    }

    fn prev_span(&self) -> SourceSpan {
        self.toks[self.pos.saturating_sub(1).min(self.toks.len() - 1)].span
    }

    fn bump(&mut self) -> &'a Token {
        let t = &self.toks[self.pos];
        self.pos += 1;
        t
    }

    fn is_punct(&self, p: &str) -> bool {
        self.peek().is_some_and(|t| t.is_punct(p))
    }

    fn is_kw(&self, k: &str) -> bool {
        self.peek().is_some_and(|t| t.is_keyword(k))
    }

    fn eat(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, k: &str) -> bool {
        if self.is_kw(k) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn unexpected(&self, expected: &str) -> FrontendError {
        match self.peek() {
            Some(t) => FrontendError::new(t.span, format!("expected {expected}, found '{}'", t.text)),
            None => FrontendError::new(self.cur_span(), format!("expected {expected}, found end of input")),
        }
    }

    fn expect(&mut self, p: &str) -> Result<&'a Token, FrontendError> {
        if self.is_punct(p) {
            Ok(self.bump())
        } else {
            Err(self.unexpected(&format!("'{p}'")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<Ident, FrontendError> {
        match self.peek() {
            Some(t) if t.is_ident() => {
                self.pos += 1;
                Ok(Ident { name: t.text.clone(), span: t.span, origin: t.origin.clone() })
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn outside(&self, span: SourceSpan, what: &str) -> FrontendError {
        FrontendError::new(span, format!("{what} {OUTSIDE}"))
    }

    // ---- scopes ----

    fn is_typedef_name(&self, name: &str) -> bool {
        for s in self.scopes.iter().rev() {
            if let Some(&b) = s.get(name) {
                return b;
            }
        }
        false
    }

    fn declare(&mut self, name: &str, is_typedef: bool) {
        self.scopes.last_mut().expect("scope").insert(name.to_string(), is_typedef);
    }

    fn push_scope(&mut self) {
        self.scopes.push(HashMap::new());
    }

    fn pop_scope(&mut self) {
        self.scopes.pop();
    }

    // ---- ids ----

    fn stmt_id(&mut self) -> StmtId {
        let id = StmtId(self.next_stmt);
        self.next_stmt += 1;
        id
    }

    fn decl_id(&mut self) -> DeclaratorId {
        let id = DeclaratorId(self.next_decl);
        self.next_decl += 1;
        id
    }

    fn mk_expr(&mut self, kind: ExprKind, start: SourceSpan, origin: MacroOrigin) -> Expr {
        let id = ExprId(self.next_expr);
        self.next_expr += 1;
        Expr { id, kind, span: start.to(self.prev_span()), origin }
    }

    // ---- declarations ----

    fn is_decl_start(&self) -> bool {
        self.is_decl_start_at(0)
    }

    fn is_decl_start_at(&self, n: usize) -> bool {
        match self.peek_at(n) {
            Some(t) if t.kind == TokenKind::Keyword => matches!(
                t.text.as_str(),
                "typedef" | "extern" | "static" | "auto" | "register" | "const" | "volatile" | "restrict" | "inline"
                    | "void" | "char" | "short" | "int" | "long" | "float" | "double" | "signed" | "unsigned"
                    | "_Bool" | "struct" | "union" | "enum"
            ),
            Some(t) if t.is_ident() => {
                self.is_typedef_name(&t.text) || t.text == "_Complex" || t.text == "_Imaginary"
            }
            _ => false,
        }
    }

    fn decl_specs(&mut self) -> Result<DeclSpecs, FrontendError> {
        let start = self.cur_span();
        let mut storage = None;
        let mut quals = Qualifiers::default();
        let mut is_inline = false;
        let mut words: Vec<&str> = Vec::new();
        let mut special: Option<TypeSpec> = None;
        loop {
            let Some(t) = self.peek() else { break };
            if t.kind == TokenKind::Keyword {
                let sc = match t.text.as_str() {
                    "typedef" => Some(StorageClass::Typedef),
                    "extern" => Some(StorageClass::Extern),
                    "static" => Some(StorageClass::Static),
                    "auto" => Some(StorageClass::Auto),
                    "register" => Some(StorageClass::Register),
                    _ => None,
                };
                if let Some(sc) = sc {
                    if storage.is_some() {
                        return Err(FrontendError::new(t.span, "multiple storage classes in declaration"));
                    }
                    storage = Some(sc);
                    self.pos += 1;
                    continue;
                }
                match t.text.as_str() {
                    "const" => quals.is_const = true,
                    "volatile" => quals.is_volatile = true,
                    "restrict" => quals.is_restrict = true,
                    "inline" => is_inline = true,
                    "void" | "char" | "short" | "int" | "long" | "float" | "double" | "signed" | "unsigned" | "_Bool" => {
                        if special.is_some() {
                            return Err(FrontendError::new(t.span, "conflicting type specifiers"));
                        }
                        words.push(t.text.as_str());
                    }
                    "struct" | "union" => {
                        if special.is_some() || !words.is_empty() {
                            return Err(FrontendError::new(t.span, "conflicting type specifiers"));
                        }
                        special = Some(TypeSpec::Record(self.record_spec()?));
                        continue;
                    }
                    "enum" => {
                        if special.is_some() || !words.is_empty() {
                            return Err(FrontendError::new(t.span, "conflicting type specifiers"));
                        }
                        special = Some(TypeSpec::Enum(self.enum_spec()?));
                        continue;
                    }
                    _ => break,
                }
                self.pos += 1;
            } else if t.is_ident() && (t.text == "_Complex" || t.text == "_Imaginary") {
                return Err(self.outside(t.span, &format!("'{}'", t.text)));
            } else if t.is_ident() && special.is_none() && words.is_empty() && self.is_typedef_name(&t.text) {
                special = Some(TypeSpec::Named(t.text.clone()));
                self.pos += 1;
            } else {
                break;
            }
        }
        let ty = match special {
            Some(s) => s,
            None => {
                if words.is_empty() {
                    return Err(self.unexpected("type specifier"));
                }
                combine_type_words(&words).ok_or_else(|| FrontendError::new(start, format!("invalid type '{}'", words.join(" "))))?
            }
        };
        Ok(DeclSpecs { storage, quals, ty, is_inline, span: start })
    }

    fn record_spec(&mut self) -> Result<RecordSpec, FrontendError> {
        let kw = self.bump();
        let is_union = kw.text == "union";
        let tag = if self.peek().is_some_and(|t| t.is_ident()) { Some(self.bump().text.clone()) } else { None };
        let mut fields = None;
        if self.eat("{") {
            let mut list = Vec::new();
            while !self.eat("}") {
                let fstart = self.cur_span();
                let specs = self.decl_specs()?;
                let mut decls = Vec::new();
                if !self.is_punct(";") {
                    loop {
                        if self.is_punct(":") {
                            return Err(self.outside(self.cur_span(), "bit-field"));
                        }
                        let d = self.declarator(DeclMode::Named)?;
                        if self.is_punct(":") {
                            return Err(self.outside(self.cur_span(), "bit-field"));
                        }
                        decls.push(d);
                        if !self.eat(",") {
                            break;
                        }
                    }
                }
                self.expect(";")?;
                list.push(FieldDecl { specs, declarators: decls, span: fstart });
            }
            fields = Some(list);
        } else if tag.is_none() {
            return Err(self.unexpected("struct tag or '{'"));
        }
        Ok(RecordSpec { is_union, tag, fields, span: kw.span })
    }

    fn enum_spec(&mut self) -> Result<EnumSpec, FrontendError> {
        let kw = self.bump();
        let tag = if self.peek().is_some_and(|t| t.is_ident()) { Some(self.bump().text.clone()) } else { None };
        let mut enumerators = None;
        if self.eat("{") {
            let mut list = Vec::new();
            while !self.is_punct("}") {
                let name = self.ident("enumerator name")?;
                let value = if self.eat("=") { Some(self.conditional()?) } else { None };
                self.declare(&name.name, false);
                let id = self.decl_id();
                list.push(Enumerator { id, name, value });
                if !self.eat(",") {
                    break;
                }
            }
            self.expect("}")?;
            enumerators = Some(list);
        } else if tag.is_none() {
            return Err(self.unexpected("enum tag or '{'"));
        }
        Ok(EnumSpec { tag, enumerators, span: kw.span })
    }

    fn pointer_quals(&mut self) -> Qualifiers {
        let mut q = Qualifiers::default();
        loop {
            if self.eat_kw("const") {
                q.is_const = true;
            } else if self.eat_kw("volatile") {
                q.is_volatile = true;
            } else if self.eat_kw("restrict") {
                q.is_restrict = true;
            } else {
                return q;
            }
        }
    }

    fn declarator(&mut self, mode: DeclMode) -> Result<Declarator, FrontendError> {
        let start = self.cur_span();
        let mut ptrs = Vec::new();
        while self.eat("*") {
            ptrs.push(self.pointer_quals());
        }
        let mut name = None;
        let mut inner = Vec::new();
        let named_ok = mode != DeclMode::Abstract;
        match self.peek() {
            Some(t) if t.is_ident() && named_ok && (mode == DeclMode::Named || !self.is_typedef_name(&t.text)) => {
                name = Some(self.ident("identifier")?);
            }
            Some(t) if t.is_punct("(") && self.is_grouping_paren(mode) => {
                let _ = t;
                self.pos += 1;
                let d = self.declarator(mode)?;
                self.expect(")")?;
                name = d.name;
                inner = d.derived;
            }
            _ => {
                if mode == DeclMode::Named {
                    return Err(self.unexpected("identifier"));
                }
            }
        }
        let mut suffixes = Vec::new();
        loop {
            if self.eat("[") {
                if self.is_kw("static") || self.is_kw("const") || self.is_punct("*") && self.peek_at(1).is_some_and(|t| t.is_punct("]")) {
                    return Err(self.outside(self.cur_span(), "array declarator qualifier"));
                }
                let size = if self.is_punct("]") { None } else { Some(Box::new(self.assignment()?)) };
                self.expect("]")?;
                suffixes.push(Derived::Array(size));
            } else if self.is_punct("(") {
                self.pos += 1;
                suffixes.push(self.param_list()?);
            } else {
                break;
            }
        }
        let mut derived = inner;
        derived.extend(suffixes);
        derived.extend(ptrs.into_iter().rev().map(Derived::Pointer));
        let id = self.decl_id();
        Ok(Declarator { id, name, derived, span: start.to(self.prev_span()) })
    }

    fn is_grouping_paren(&self, mode: DeclMode) -> bool {
        match self.peek_at(1) {
            Some(n) if n.is_punct("*") || n.is_punct("(") || n.is_punct("[") => {
                // `(*` and `((` group; `([` only in named declarators.
                !(mode == DeclMode::Abstract && n.is_punct("["))
            }
            Some(n) if n.is_ident() => mode != DeclMode::Abstract && !self.is_typedef_name(&n.text),
            _ => false,
        }
    }

    /// After '(' has been consumed.
    fn param_list(&mut self) -> Result<Derived, FrontendError> {
        if self.eat(")") {
            return Ok(Derived::Function { params: Vec::new(), variadic: false, prototype: false });
        }
        if self.is_kw("void") && self.peek_at(1).is_some_and(|t| t.is_punct(")")) {
            self.pos += 2;
            return Ok(Derived::Function { params: Vec::new(), variadic: false, prototype: true });
        }
        let mut params = Vec::new();
        let mut variadic = false;
        self.push_scope();
        loop {
            if self.eat("...") {
                variadic = true;
                break;
            }
            if !self.is_decl_start() {
                let t = self.peek();
                if t.is_some_and(|t| t.is_ident())
                    && self.peek_at(1).is_some_and(|n| n.is_punct(",") || n.is_punct(")"))
                {
                    self.pop_scope();
                    return Err(self.outside(self.cur_span(), "K&R-style parameter list"));
                }
                self.pop_scope();
                return Err(self.unexpected("parameter declaration"));
            }
            let start = self.cur_span();
            let specs = self.decl_specs()?;
            let declarator = self.declarator(DeclMode::Either)?;
            if let Some(n) = &declarator.name {
                self.declare(&n.name, false);
            }
            params.push(ParamDecl { specs, declarator, span: start });
            if !self.eat(",") {
                break;
            }
        }
        self.pop_scope();
        self.expect(")")?;
        Ok(Derived::Function { params, variadic, prototype: true })
    }

    fn type_name(&mut self) -> Result<TypeName, FrontendError> {
        let specs = self.decl_specs()?;
        if specs.storage.is_some() {
            return Err(FrontendError::new(specs.span, "storage class in type name"));
        }
        let declarator = self.declarator(DeclMode::Abstract)?;
        Ok(TypeName { specs, declarator })
    }

    fn initializer(&mut self) -> Result<Initializer, FrontendError> {
        if self.is_punct("{") {
            let span = self.bump().span;
            let mut items = Vec::new();
            while !self.is_punct("}") {
                if self.is_punct(".") || self.is_punct("[") {
                    return Err(self.outside(self.cur_span(), "designated initializer"));
                }
                items.push(self.initializer()?);
                if !self.eat(",") {
                    break;
                }
            }
            self.expect("}")?;
            Ok(Initializer::List { items, span })
        } else {
            Ok(Initializer::Expr(self.assignment()?))
        }
    }

    /// Rest of a declaration after its specifiers and first declarator.
    fn finish_declaration(&mut self, specs: DeclSpecs, first: Declarator, start: SourceSpan) -> Result<Declaration, FrontendError> {
        let is_typedef = specs.storage == Some(StorageClass::Typedef);
        let mut declarators = Vec::new();
        let mut d = first;
        loop {
            if let Some(n) = &d.name {
                self.declare(&n.name, is_typedef);
            }
            let init = if self.eat("=") {
                if is_typedef {
                    return Err(FrontendError::new(self.prev_span(), "typedef cannot have an initializer"));
                }
                Some(self.initializer()?)
            } else {
                None
            };
            declarators.push(InitDeclarator { declarator: d, init });
            if !self.eat(",") {
                break;
            }
            d = self.declarator(DeclMode::Named)?;
        }
        self.expect(";")?;
        Ok(Declaration { specs, declarators, span: start.to(self.prev_span()) })
    }

    fn declaration(&mut self) -> Result<Declaration, FrontendError> {
        let start = self.cur_span();
        let specs = self.decl_specs()?;
        if self.eat(";") {
            return Ok(Declaration { specs, declarators: Vec::new(), span: start });
        }
        let first = self.declarator(DeclMode::Named)?;
        self.finish_declaration(specs, first, start)
    }

    fn external_decl(&mut self) -> Result<ExternalDecl, FrontendError> {
        let start = self.cur_span();
        if !self.is_decl_start() {
            return Err(self.unexpected("declaration"));
        }
        let specs = self.decl_specs()?;
        if self.eat(";") {
            return Ok(ExternalDecl::Declaration(Declaration { specs, declarators: Vec::new(), span: start }));
        }
        let declarator = self.declarator(DeclMode::Named)?;
        let is_function = matches!(declarator.derived.first(), Some(Derived::Function { .. }));
        if is_function && self.is_decl_start() {
            return Err(self.outside(self.cur_span(), "K&R-style function definition"));
        }
        if is_function && self.is_punct("{") {
            let name = declarator.name.as_ref().expect("named declarator");
            self.declare(&name.name.clone(), false);
            self.push_scope();
            if let Some(Derived::Function { params, .. }) = declarator.derived.first() {
                for p in params {
                    if let Some(n) = &p.declarator.name {
                        let n = n.name.clone();
                        self.declare(&n, false);
                    }
                }
            }
            let body = self.compound(false)?;
            self.pop_scope();
            let end = self.prev_span();
            return Ok(ExternalDecl::Function(FunctionDef { specs, declarator, body, span: start, end }));
        }
        Ok(ExternalDecl::Declaration(self.finish_declaration(specs, declarator, start)?))
    }

    // ---- statements ----

    fn mk_stmt(&self, id: StmtId, kind: StmtKind, start: SourceSpan) -> Stmt {
        Stmt { id, kind, span: start.to(self.prev_span()) }
    }

    fn compound(&mut self, new_scope: bool) -> Result<Stmt, FrontendError> {
        let start = self.cur_span();
        let id = self.stmt_id();
        self.expect("{")?;
        if new_scope {
            self.push_scope();
        }
        let mut items = Vec::new();
        while !self.is_punct("}") {
            if self.at_end() {
                return Err(self.unexpected("'}'"));
            }
            items.push(self.block_item()?);
        }
        self.pos += 1;
        if new_scope {
            self.pop_scope();
        }
        Ok(Stmt { id, kind: StmtKind::Compound(items), span: start })
    }

    fn block_item(&mut self) -> Result<Stmt, FrontendError> {
        // A typedef name followed by ':' is a label, not a declaration.
        let is_label = self.peek().is_some_and(|t| t.is_ident()) && self.peek_at(1).is_some_and(|t| t.is_punct(":"));
        if self.is_decl_start() && !is_label {
            let start = self.cur_span();
            let id = self.stmt_id();
            let d = self.declaration()?;
            return Ok(self.mk_stmt(id, StmtKind::Decl(d), start));
        }
        self.statement()
    }

    fn statement(&mut self) -> Result<Stmt, FrontendError> {
        let start = self.cur_span();
        let Some(t) = self.peek() else {
            return Err(self.unexpected("statement"));
        };
        if t.is_punct("{") {
            return self.compound(true);
        }
        if t.is_ident() && self.peek_at(1).is_some_and(|n| n.is_punct(":")) {
            let id = self.stmt_id();
            let label = self.ident("label")?;
            self.pos += 1;
            let body = Box::new(self.statement()?);
            return Ok(self.mk_stmt(id, StmtKind::Labeled { label, body }, start));
        }
        let id = self.stmt_id();
        let kind = if t.kind == TokenKind::Keyword {
            match t.text.as_str() {
                "if" => {
                    self.pos += 1;
                    self.expect("(")?;
                    let cond = self.expr()?;
                    self.expect(")")?;
                    let then = Box::new(self.statement()?);
                    let els = if self.eat_kw("else") { Some(Box::new(self.statement()?)) } else { None };
                    StmtKind::If { cond, then, els }
                }
                "switch" => {
                    self.pos += 1;
                    self.expect("(")?;
                    let cond = self.expr()?;
                    self.expect(")")?;
                    StmtKind::Switch { cond, body: Box::new(self.statement()?) }
                }
                "while" => {
                    self.pos += 1;
                    self.expect("(")?;
                    let cond = self.expr()?;
                    self.expect(")")?;
                    StmtKind::While { cond, body: Box::new(self.statement()?) }
                }
                "do" => {
                    self.pos += 1;
                    let body = Box::new(self.statement()?);
                    if !self.eat_kw("while") {
                        return Err(self.unexpected("'while'"));
                    }
                    self.expect("(")?;
                    let cond = self.expr()?;
                    self.expect(")")?;
                    self.expect(";")?;
                    StmtKind::DoWhile { body, cond }
                }
                "for" => {
                    self.pos += 1;
                    self.expect("(")?;
                    self.push_scope();
                    let init = if self.eat(";") {
                        None
                    } else if self.is_decl_start() {
                        let s = self.cur_span();
                        let iid = self.stmt_id();
                        let d = self.declaration()?;
                        Some(Box::new(self.mk_stmt(iid, StmtKind::Decl(d), s)))
                    } else {
                        let s = self.cur_span();
                        let iid = self.stmt_id();
                        let e = self.expr()?;
                        let st = self.mk_stmt(iid, StmtKind::Expr(Some(e)), s);
                        self.expect(";")?;
                        Some(Box::new(st))
                    };
                    let cond = if self.is_punct(";") { None } else { Some(self.expr()?) };
                    self.expect(";")?;
                    let step = if self.is_punct(")") {
                        None
                    } else {
                        let s = self.cur_span();
                        let sid = self.stmt_id();
                        let e = self.expr()?;
                        Some(Box::new(self.mk_stmt(sid, StmtKind::Expr(Some(e)), s)))
                    };
                    self.expect(")")?;
                    let body = Box::new(self.statement()?);
                    self.pop_scope();
                    StmtKind::For { init, cond, step, body }
                }
                "goto" => {
                    self.pos += 1;
                    let l = self.ident("label")?;
                    self.expect(";")?;
                    StmtKind::Goto(l)
                }
                "continue" => {
                    self.pos += 1;
                    self.expect(";")?;
                    StmtKind::Continue
                }
                "break" => {
                    self.pos += 1;
                    self.expect(";")?;
                    StmtKind::Break
                }
                "return" => {
                    self.pos += 1;
                    let v = if self.is_punct(";") { None } else { Some(self.expr()?) };
                    self.expect(";")?;
                    StmtKind::Return(v)
                }
                "case" => {
                    self.pos += 1;
                    let value = self.conditional()?;
                    self.expect(":")?;
                    StmtKind::Case { value, body: Box::new(self.statement()?) }
                }
                "default" => {
                    self.pos += 1;
                    self.expect(":")?;
                    StmtKind::Default { body: Box::new(self.statement()?) }
                }
                _ if self.is_decl_start() => {
                    return Err(FrontendError::new(t.span, "declaration is not allowed here"));
                }
                _ => self.expr_stmt()?,
            }
        } else {
            self.expr_stmt()?
        };
        Ok(self.mk_stmt(id, kind, start))
    }

    fn expr_stmt(&mut self) -> Result<StmtKind, FrontendError> {
        if self.eat(";") {
            return Ok(StmtKind::Expr(None));
        }
        let e = self.expr()?;
        self.expect(";")?;
        Ok(StmtKind::Expr(Some(e)))
    }

    // ---- expressions ----

    fn expr(&mut self) -> Result<Expr, FrontendError> {
        let start = self.cur_span();
        let mut lhs = self.assignment()?;
        while self.is_punct(",") {
            let op = self.bump();
            let rhs = self.assignment()?;
            lhs = self.mk_expr(ExprKind::Comma { lhs: Box::new(lhs), rhs: Box::new(rhs) }, start, op.origin.clone());
        }
        Ok(lhs)
    }

    fn assignment(&mut self) -> Result<Expr, FrontendError> {
        let start = self.cur_span();
        let lhs = self.conditional()?;
        let Some(t) = self.peek() else { return Ok(lhs) };
        if t.kind != TokenKind::Punctuator {
            return Ok(lhs);
        }
        let op = match t.text.as_str() {
            "=" => None,
            "*=" => Some(BinaryOp::Mul),
            "/=" => Some(BinaryOp::Div),
            "%=" => Some(BinaryOp::Rem),
            "+=" => Some(BinaryOp::Add),
            "-=" => Some(BinaryOp::Sub),
            "<<=" => Some(BinaryOp::Shl),
            ">>=" => Some(BinaryOp::Shr),
            "&=" => Some(BinaryOp::BitAnd),
            "^=" => Some(BinaryOp::BitXor),
            "|=" => Some(BinaryOp::BitOr),
            _ => return Ok(lhs),
        };
        self.pos += 1;
        let rhs = self.assignment()?;
        Ok(self.mk_expr(ExprKind::Assign { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, start, t.origin.clone()))
    }

    fn conditional(&mut self) -> Result<Expr, FrontendError> {
        let start = self.cur_span();
        let cond = self.binary(1)?;
        if !self.is_punct("?") {
            return Ok(cond);
        }
        let q = self.bump();
        let then = self.expr()?;
        self.expect(":")?;
        let els = self.conditional()?;
        Ok(self.mk_expr(
            ExprKind::Conditional { cond: Box::new(cond), then: Box::new(then), els: Box::new(els) },
            start,
            q.origin.clone(),
        ))
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, FrontendError> {
        let start = self.cur_span();
        let mut lhs = self.cast()?;
        loop {
            let Some(t) = self.peek() else { break };
            if t.kind != TokenKind::Punctuator {
                break;
            }
            let Some((op, prec)) = binary_op(&t.text) else { break };
            if prec < min_prec {
                break;
            }
            self.pos += 1;
            let rhs = self.binary(prec + 1)?;
            lhs = self.mk_expr(ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, start, t.origin.clone());
        }
        Ok(lhs)
    }

    fn is_type_in_parens(&self) -> bool {
        self.is_punct("(") && self.is_decl_start_at(1)
    }

    fn cast(&mut self) -> Result<Expr, FrontendError> {
        if self.is_type_in_parens() {
            let start = self.cur_span();
            let open = self.bump();
            let ty = self.type_name()?;
            self.expect(")")?;
            if self.is_punct("{") {
                return Err(self.outside(open.span, "compound literal"));
            }
            let expr = self.cast()?;
            return Ok(self.mk_expr(ExprKind::Cast { ty: Box::new(ty), expr: Box::new(expr) }, start, open.origin.clone()));
        }
        self.unary()
    }

    fn unary(&mut self) -> Result<Expr, FrontendError> {
        let start = self.cur_span();
        let Some(t) = self.peek() else {
            return Err(self.unexpected("expression"));
        };
        if t.is_keyword("sizeof") {
            self.pos += 1;
            if self.is_type_in_parens() {
                self.pos += 1;
                let ty = self.type_name()?;
                self.expect(")")?;
                if self.is_punct("{") {
                    return Err(self.outside(t.span, "compound literal"));
                }
                return Ok(self.mk_expr(ExprKind::SizeofType(Box::new(ty)), start, t.origin.clone()));
            }
            let e = self.unary()?;
            return Ok(self.mk_expr(ExprKind::SizeofExpr(Box::new(e)), start, t.origin.clone()));
        }
        let op = if t.kind == TokenKind::Punctuator {
            match t.text.as_str() {
                "++" => Some(UnaryOp::PreInc),
                "--" => Some(UnaryOp::PreDec),
                "&" => Some(UnaryOp::AddrOf),
                "*" => Some(UnaryOp::Deref),
                "+" => Some(UnaryOp::Plus),
                "-" => Some(UnaryOp::Neg),
                "~" => Some(UnaryOp::BitNot),
                "!" => Some(UnaryOp::Not),
                _ => None,
            }
        } else {
            None
        };
        if let Some(op) = op {
            self.pos += 1;
            let operand = if op.is_inc_dec() { self.unary()? } else { self.cast()? };
            return Ok(self.mk_expr(ExprKind::Unary { op, operand: Box::new(operand) }, start, t.origin.clone()));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<Expr, FrontendError> {
        let start = self.cur_span();
        let mut e = self.primary()?;
        loop {
            let Some(t) = self.peek() else { break };
            if t.kind != TokenKind::Punctuator {
                break;
            }
            match t.text.as_str() {
                "[" => {
                    self.pos += 1;
                    let index = self.expr()?;
                    self.expect("]")?;
                    e = self.mk_expr(ExprKind::Index { base: Box::new(e), index: Box::new(index) }, start, t.origin.clone());
                }
                "(" => {
                    self.pos += 1;
                    let mut args = Vec::new();
                    if !self.is_punct(")") {
                        loop {
                            args.push(self.assignment()?);
                            if !self.eat(",") {
                                break;
                            }
                        }
                    }
                    self.expect(")")?;
                    let origin = e.origin.clone();
                    e = self.mk_expr(ExprKind::Call { callee: Box::new(e), args }, start, origin);
                }
                "." | "->" => {
                    self.pos += 1;
                    let field = self.ident("member name")?;
                    let arrow = t.text == "->";
                    e = self.mk_expr(ExprKind::Member { base: Box::new(e), field, arrow }, start, t.origin.clone());
                }
                "++" | "--" => {
                    self.pos += 1;
                    let op = if t.text == "++" { UnaryOp::PostInc } else { UnaryOp::PostDec };
                    e = self.mk_expr(ExprKind::Unary { op, operand: Box::new(e) }, start, t.origin.clone());
                }
                _ => break,
            }
        }
        Ok(e)
    }

    fn primary(&mut self) -> Result<Expr, FrontendError> {
        let start = self.cur_span();
        let Some(t) = self.peek() else {
            return Err(self.unexpected("expression"));
        };
        let kind = match t.kind {
            TokenKind::Identifier => {
                self.pos += 1;
                ExprKind::Ident(t.text.clone())
            }
            TokenKind::IntegerConstant => {
                self.pos += 1;
                let (value, unsigned) = parse_int_literal(&t.text)
                    .ok_or_else(|| FrontendError::new(t.span, format!("invalid integer constant '{}'", t.text)))?;
                let long = t.text.to_ascii_lowercase().contains('l');
                let decimal = !t.text.starts_with('0') || t.text.len() == 1 || !t.text.as_bytes()[1].is_ascii_alphanumeric();
                ExprKind::IntLit { value, unsigned, long, decimal }
            }
            TokenKind::FloatingConstant => {
                self.pos += 1;
                let (value, single) = parse_float_literal(&t.text)
                    .ok_or_else(|| FrontendError::new(t.span, format!("invalid floating constant '{}'", t.text)))?;
                ExprKind::FloatLit { value, single }
            }
            TokenKind::CharacterConstant => {
                self.pos += 1;
                let v = parse_char_literal(&t.text)
                    .ok_or_else(|| FrontendError::new(t.span, format!("invalid character constant {}", t.text)))?;
                ExprKind::CharLit(v)
            }
            TokenKind::StringLiteral => {
                let mut bytes = Vec::new();
                while let Some(s) = self.peek().filter(|s| s.kind == TokenKind::StringLiteral) {
                    self.pos += 1;
                    bytes.extend(
                        parse_string_literal(&s.text)
                            .ok_or_else(|| FrontendError::new(s.span, format!("invalid string literal {}", s.text)))?,
                    );
                }
                ExprKind::StrLit(bytes)
            }
            TokenKind::Punctuator if t.text == "(" => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(")")?;
                return Ok(e);
            }
            _ => return Err(self.unexpected("expression")),
        };
        Ok(self.mk_expr(kind, start, t.origin.clone()))
    }
}

fn binary_op(text: &str) -> Option<(BinaryOp, u8)> {
    use BinaryOp::*;
    Some(match text {
        "||" => (LogOr, 1),
        "&&" => (LogAnd, 2),
        "|" => (BitOr, 3),
        "^" => (BitXor, 4),
        "&" => (BitAnd, 5),
        "==" => (Eq, 6),
        "!=" => (Ne, 6),
        "<" => (Lt, 7),
        ">" => (Gt, 7),
        "<=" => (Le, 7),
        ">=" => (Ge, 7),
        "<<" => (Shl, 8),
        ">>" => (Shr, 8),
        "+" => (Add, 9),
        "-" => (Sub, 9),
        "*" => (Mul, 10),
        "/" => (Div, 10),
        "%" => (Rem, 10),
        _ => return None,
    })
}

fn combine_type_words(words: &[&str]) -> Option<TypeSpec> {
    let count = |w: &str| words.iter().filter(|x| **x == w).count();
    let signed = count("signed");
    let unsigned = count("unsigned");
    let long = count("long");
    let short = count("short");
    let int = count("int");
    let char_ = count("char");
    if signed + unsigned > 1 || short > 1 || long > 2 || int > 1 || char_ > 1 {
        return None;
    }
    let others: Vec<&str> = words
        .iter()
        .copied()
        .filter(|w| !matches!(*w, "signed" | "unsigned" | "long" | "short" | "int" | "char"))
        .collect();
    if let [single] = others.as_slice() {
        let plain = signed + unsigned + short + int + char_ == 0;
        return match *single {
            "void" if plain && long == 0 => Some(TypeSpec::Void),
            "_Bool" if plain && long == 0 => Some(TypeSpec::Bool),
            "float" if plain && long == 0 => Some(TypeSpec::Float),
            "double" if plain && long == 0 => Some(TypeSpec::Double),
            "double" if plain && long == 1 => Some(TypeSpec::LongDouble),
            _ => None,
        };
    }
    if !others.is_empty() {
        return None;
    }
    let u = unsigned == 1;
    Some(if char_ == 1 {
        if short + long + int > 0 {
            return None;
        }
        if u {
            TypeSpec::UChar
        } else if signed == 1 {
            TypeSpec::SChar
        } else {
            TypeSpec::Char
        }
    } else if short == 1 {
        if long > 0 {
            return None;
        }
        if u { TypeSpec::UShort } else { TypeSpec::Short }
    } else if long == 2 {
        if u { TypeSpec::ULongLong } else { TypeSpec::LongLong }
    } else if long == 1 {
        if u { TypeSpec::ULong } else { TypeSpec::Long }
    } else if u {
        TypeSpec::UInt
    } else {
        TypeSpec::Int
    })
}

/// Returns the value and whether the constant has an `f`/`F` suffix.
pub fn parse_float_literal(text: &str) -> Option<(f64, bool)> {
    let single = text.ends_with(['f', 'F']);
    let body = text.trim_end_matches(['f', 'F', 'l', 'L']);
    let lower = body.to_ascii_lowercase();
    let value = if let Some(hex) = lower.strip_prefix("0x") {
        let (mant, exp) = hex.split_once('p')?;
        let (int_part, frac_part) = mant.split_once('.').unwrap_or((mant, ""));
        let mut v = 0f64;
        for c in int_part.chars() {
            v = v * 16.0 + c.to_digit(16)? as f64;
        }
        let mut scale = 1.0 / 16.0;
        for c in frac_part.chars() {
            v += c.to_digit(16)? as f64 * scale;
            scale /= 16.0;
        }
        v * 2f64.powi(exp.parse::<i32>().ok()?)
    } else {
        lower.parse::<f64>().ok()?
    };
    Some((if single { value as f32 as f64 } else { value }, single))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::lexer::lex;
    use crate::frontend::span::FileId;

    fn parse_src(src: &str) -> Result<TranslationUnit, FrontendError> {
        parse(&lex(src, FileId(0)).unwrap(), &["uint32_t", "FILE", "size_t"])
    }

    #[test]
    fn minimal_main() {
        let tu = parse_src("int main(void){return 0;}").unwrap();
        assert_eq!(tu.items.len(), 1);
        let f = tu.function("main").unwrap();
        let StmtKind::Compound(body) = &f.body.kind else { panic!() };
        assert_eq!(body.len(), 1);
        assert!(matches!(body[0].kind, StmtKind::Return(Some(_))));
    }

    #[test]
    fn enum_with_shift_initializers() {
        let tu = parse_src("typedef enum { BIT0 = 1U << 0, BIT1 = 1U << 1, BIT2 = 1U << 2 } Bit_Masks;").unwrap();
        let ExternalDecl::Declaration(d) = &tu.items[0] else { panic!() };
        let TypeSpec::Enum(e) = &d.specs.ty else { panic!() };
        let list = e.enumerators.as_ref().unwrap();
        assert_eq!(list.len(), 3);
        for en in list {
            assert!(matches!(en.value.as_ref().unwrap().kind, ExprKind::Binary { op: BinaryOp::Shl, .. }));
        }
    }

    #[test]
    fn bad_parameter_list() {
        let err = parse_src("int f( {").unwrap_err();
        assert!(err.message.starts_with("expected parameter declaration"), "{}", err.message);
        assert_eq!(err.span.column, 8);
    }

    #[test]
    fn declarator_derivation_order() {
        let tu = parse_src("int *a[3]; int (*fp)(int); int * const * p;").unwrap();
        let decl = |i: usize| match &tu.items[i] {
            ExternalDecl::Declaration(d) => d.declarators[0].declarator.derived.clone(),
            _ => panic!(),
        };
        assert!(matches!(decl(0).as_slice(), [Derived::Array(Some(_)), Derived::Pointer(_)]));
        assert!(matches!(decl(1).as_slice(), [Derived::Pointer(_), Derived::Function { .. }]));
        match decl(2).as_slice() {
            [Derived::Pointer(outer), Derived::Pointer(inner)] => {
                assert!(!outer.is_const);
                assert!(inner.is_const);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unsupported_constructs() {
        let msg = |s: &str| parse_src(s).unwrap_err().message;
        assert!(msg("struct s { int a : 3; };").contains(OUTSIDE));
        assert!(msg("struct p { int x; }; void f(void) { struct p q = { .x = 1 }; }").contains(OUTSIDE));
        assert!(msg("struct p { int x; }; void f(void) { (struct p){1}; }").contains(OUTSIDE));
        assert!(msg("int f(a, b) int a; int b; { return 0; }").contains(OUTSIDE));
        assert!(msg("_Complex double z;").contains(OUTSIDE));
    }

    #[test]
    fn stmt_ids_are_dense() {
        let tu = parse_src("void f(int c){ int x; if (c) { x = 1; } else x = 2; for (int i = 0; i < 3; ++i) ; }").unwrap();
        let mut ids: Vec<u32> = tu.statements().iter().map(|s| s.id.0).collect();
        ids.sort();
        assert_eq!(ids, (0..tu.stmt_count).collect::<Vec<_>>());
    }

    #[test]
    fn typedef_names_disambiguate_casts() {
        let tu = parse_src("typedef int T; int g(int x) { return (T)x + (x); }").unwrap();
        let f = tu.function("g").unwrap();
        let StmtKind::Compound(b) = &f.body.kind else { panic!() };
        let StmtKind::Return(Some(e)) = &b[0].kind else { panic!() };
        let ExprKind::Binary { lhs, rhs, .. } = &e.kind else { panic!() };
        assert!(matches!(lhs.kind, ExprKind::Cast { .. }));
        assert!(matches!(rhs.kind, ExprKind::Ident(_)));
    }

    #[test]
    fn precedence_and_assoc() {
        let e = parse_expression(&lex("a - b - c * d", FileId(0)).unwrap(), &[]).unwrap();
        let ExprKind::Binary { op: BinaryOp::Sub, lhs, rhs } = &e.kind else { panic!() };
        assert!(matches!(lhs.kind, ExprKind::Binary { op: BinaryOp::Sub, .. }));
        assert!(matches!(rhs.kind, ExprKind::Binary { op: BinaryOp::Mul, .. }));
    }

    #[test]
    fn float_literals() {
        assert_eq!(parse_float_literal("1.5f"), Some((1.5, true)));
        assert_eq!(parse_float_literal("0x1p+3"), Some((8.0, false)));
        assert_eq!(parse_float_literal("1e2"), Some((100.0, false)));
    }
}
