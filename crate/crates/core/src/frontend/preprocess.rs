//! Directive handling and macro expansion.
//!
//! Every token produced by an expansion carries the full chain of macros
//! that produced it. Tokens that reach the output through a macro argument
//! keep their own chain, since they are spelled at the invocation site.

use std::collections::{HashMap, VecDeque};
use std::path::{Path, PathBuf};

use super::lexer::lex;
use super::span::{FileId, SourceMap, SourceSpan};
use super::token::{MacroFrame, Token, TokenKind};
use super::FrontendError;
use crate::dialect::MAX_PREPROCESS_DEPTH;

#[derive(Debug, Clone, Default)]
pub struct PreprocessOptions {
    /// `-D NAME[=VALUE]` definitions; a missing value means `1`.
    pub defines: Vec<(String, Option<String>)>,
    pub include_paths: Vec<PathBuf>,
    /// Object-like macros supplied by the libc profile (`EOF`, `NULL`, ...).
    pub builtin_macros: Vec<(String, String)>,
}

#[derive(Debug, Clone)]
struct MacroDef {
    params: Option<Vec<String>>,
    variadic: bool,
    body: Vec<Token>,
    definition: SourceSpan,
}

#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub tokens: Vec<Token>,
    pub sources: SourceMap,
    pub main_file: FileId,
    /// Every `#if`/`#ifdef`/`#ifndef`/`#elif`/`#else`/`#endif` line seen.
    pub conditional_lines: Vec<(FileId, u32)>,
    /// `#include <...>` directives, which are recorded but never read.
    pub system_includes: Vec<(String, SourceSpan)>,
}

impl Preprocessed {
    /// Whether a conditional directive appears in `file` between the lines.
    pub fn has_conditional_between(&self, file: FileId, first: u32, last: u32) -> bool {
        self.conditional_lines.iter().any(|&(f, l)| f == file && l >= first && l <= last)
    }
}

struct Cond {
    /// Enclosing region is live.
    parent_live: bool,
    /// Some branch of this conditional has been taken.
    taken: bool,
    live: bool,
    seen_else: bool,
    span: SourceSpan,
}

struct Preprocessor<'a> {
    opts: &'a PreprocessOptions,
    sources: SourceMap,
    macros: HashMap<String, MacroDef>,
    out: Vec<Token>,
    conditional_lines: Vec<(FileId, u32)>,
    system_includes: Vec<(String, SourceSpan)>,
}

/// Preprocess one translation unit given its main file text.
pub fn preprocess(
    source: &str,
    name: &str,
    path: Option<&Path>,
    opts: &PreprocessOptions,
) -> Result<Preprocessed, FrontendError> {
    let mut pp = Preprocessor {
        opts,
        sources: SourceMap::new(),
        macros: HashMap::new(),
        out: Vec::new(),
        conditional_lines: Vec::new(),
        system_includes: Vec::new(),
    };
    let main_file = pp.sources.add(name, path.map(Path::to_path_buf), source.to_string());
    pp.define_synthetic("<builtin>", &opts.builtin_macros)?;
    let cmdline: Vec<(String, String)> = opts
        .defines
        .iter()
        .map(|(n, v)| (n.clone(), v.clone().unwrap_or_else(|| "1".to_string())))
        .collect();
    pp.define_synthetic("<command-line>", &cmdline)?;
    pp.process_file(main_file, 0)?;
    Ok(Preprocessed {
        tokens: pp.out,
        sources: pp.sources,
        main_file,
        conditional_lines: pp.conditional_lines,
        system_includes: pp.system_includes,
    })
}

impl Preprocessor<'_> {
    fn define_synthetic(&mut self, name: &str, defs: &[(String, String)]) -> Result<(), FrontendError> {
        if defs.is_empty() {
            return Ok(());
        }
        let text: String = defs.iter().map(|(n, v)| format!("{n} {v}\n")).collect();
        let file = self.sources.add_synthetic(name, text.clone());
        let toks = lex(&text, file)?;
        for line in split_lines(&toks) {
            let (head, body) = line.split_first().expect("non-empty line");
            if !head.is_ident() {
                return Err(FrontendError::new(head.span, format!("invalid macro name '{}'", head.text)));
            }
            self.macros.insert(
                head.text.clone(),
                MacroDef { params: None, variadic: false, body: body.to_vec(), definition: head.span },
            );
        }
        Ok(())
    }

    fn process_file(&mut self, file: FileId, depth: usize) -> Result<(), FrontendError> {
        let text = self.sources.get(file).text.clone();
        let toks = lex(&text, file)?;
        let mut conds: Vec<Cond> = Vec::new();
        let mut pending: Vec<Token> = Vec::new();

        for line in split_lines(&toks) {
            let live = conds.last().is_none_or(|c| c.live);
            if !(line[0].is_punct("#") && line[0].line_start) {
                if live {
                    pending.extend(line.iter().cloned());
                }
                continue;
            }
            let hash = &line[0];
            let Some(dir) = line.get(1) else { continue };
            let args = &line[2..];
            let conditional = matches!(dir.text.as_str(), "if" | "ifdef" | "ifndef" | "elif" | "else" | "endif");
            if conditional {
                self.conditional_lines.push((file, hash.span.line));
            }
            match dir.text.as_str() {
                "if" | "ifdef" | "ifndef" => {
                    let value = if !live {
                        false
                    } else if dir.text == "if" {
                        self.eval_condition(args, dir.span)?
                    } else {
                        let name = args
                            .first()
                            .filter(|t| t.kind == TokenKind::Identifier || t.kind == TokenKind::Keyword)
                            .ok_or_else(|| FrontendError::new(dir.span, format!("#{} requires a macro name", dir.text)))?;
                        self.macros.contains_key(&name.text) == (dir.text == "ifdef")
                    };
                    conds.push(Cond { parent_live: live, taken: value, live: value, seen_else: false, span: hash.span });
                }
                "elif" => {
                    let c = conds.last().ok_or_else(|| FrontendError::new(dir.span, "#elif without #if"))?;
                    if c.seen_else {
                        return Err(FrontendError::new(dir.span, "#elif after #else"));
                    }
                    let eligible = c.parent_live && !c.taken;
                    let value = eligible && self.eval_condition(args, dir.span)?;
                    let c = conds.last_mut().expect("checked above");
                    c.live = value;
                    c.taken |= value;
                }
                "else" => {
                    let c = conds.last_mut().ok_or_else(|| FrontendError::new(dir.span, "#else without #if"))?;
                    if c.seen_else {
                        return Err(FrontendError::new(dir.span, "duplicate #else"));
                    }
                    c.seen_else = true;
                    c.live = c.parent_live && !c.taken;
                    c.taken = true;
                }
                "endif" => {
                    conds.pop().ok_or_else(|| FrontendError::new(dir.span, "#endif without #if"))?;
                }
                _ if !live => {}
                "define" => {
                    self.flush(&mut pending)?;
                    self.define(args, dir.span)?;
                }
                "undef" => {
                    self.flush(&mut pending)?;
                    let name = args.first().ok_or_else(|| FrontendError::new(dir.span, "#undef requires a macro name"))?;
                    self.macros.remove(&name.text);
                }
                "include" => {
                    self.flush(&mut pending)?;
                    self.include(file, args, dir.span, depth)?;
                }
                "error" => {
                    let msg: Vec<&str> = args.iter().map(|t| t.text.as_str()).collect();
                    return Err(FrontendError::new(dir.span, format!("#error {}", msg.join(" "))));
                }
                "pragma" | "line" | "warning" => {}
                _ => {
                    return Err(FrontendError::new(dir.span, format!("unknown directive '#{}'", dir.text)));
                }
            }
        }
        if let Some(c) = conds.last() {
            return Err(FrontendError::new(c.span, "unterminated conditional directive"));
        }
        self.flush(&mut pending)
    }

    fn flush(&mut self, pending: &mut Vec<Token>) -> Result<(), FrontendError> {
        if pending.is_empty() {
            return Ok(());
        }
        let toks = std::mem::take(pending);
        let expanded = self.expand(toks)?;
        self.out.extend(expanded);
        Ok(())
    }

    fn define(&mut self, args: &[Token], at: SourceSpan) -> Result<(), FrontendError> {
        let name = args.first().ok_or_else(|| FrontendError::new(at, "#define requires a macro name"))?;
        if name.kind != TokenKind::Identifier && name.kind != TokenKind::Keyword {
            return Err(FrontendError::new(name.span, format!("invalid macro name '{}'", name.text)));
        }
        if name.text == "defined" {
            return Err(FrontendError::new(name.span, "'defined' cannot be used as a macro name"));
        }
        let mut rest = &args[1..];
        let mut params = None;
        let mut variadic = false;
        // Function-like only when '(' immediately follows the name.
        if let Some(open) = rest.first() {
            if open.is_punct("(") && !open.leading_space {
                let mut list = Vec::new();
                let mut k = 1;
                loop {
                    let t = rest.get(k).ok_or_else(|| FrontendError::new(open.span, "unterminated macro parameter list"))?;
                    if t.is_punct(")") {
                        k += 1;
                        break;
                    }
                    if t.is_punct("...") {
                        variadic = true;
                    } else if t.is_ident() {
                        list.push(t.text.clone());
                    } else if !t.is_punct(",") {
                        return Err(FrontendError::new(t.span, format!("unexpected '{}' in macro parameter list", t.text)));
                    }
                    k += 1;
                }
                params = Some(list);
                rest = &rest[k..];
            }
        }
        let mut body = rest.to_vec();
        if let Some(first) = body.first_mut() {
            first.leading_space = false;
        }
        self.macros.insert(name.text.clone(), MacroDef { params, variadic, body, definition: name.span });
        Ok(())
    }

    fn include(&mut self, from: FileId, args: &[Token], at: SourceSpan, depth: usize) -> Result<(), FrontendError> {
        let mut args = args.to_vec();
        if args.first().is_some_and(|t| t.is_ident()) {
            args = self.expand(args)?;
        }
        let first = args.first().ok_or_else(|| FrontendError::new(at, "#include expects a file name"))?;
        if first.is_punct("<") {
            let name: String = args[1..].iter().take_while(|t| !t.is_punct(">")).map(|t| t.text.as_str()).collect();
            self.system_includes.push((name, first.span));
            return Ok(());
        }
        if first.kind != TokenKind::StringLiteral {
            return Err(FrontendError::new(first.span, "#include expects \"FILE\" or <FILE>"));
        }
        if depth + 1 > MAX_PREPROCESS_DEPTH {
            return Err(FrontendError::new(at, format!("#include nested deeper than {MAX_PREPROCESS_DEPTH}")));
        }
        let name = first.text.trim_matches('"').to_string();
        let base = self.sources.get(from).path.as_ref().and_then(|p| p.parent().map(Path::to_path_buf));
        let candidates = base.into_iter().chain(self.opts.include_paths.iter().cloned());
        let found = candidates.map(|dir| dir.join(&name)).find(|p| p.is_file());
        let Some(path) = found else {
            return Err(FrontendError::new(first.span, format!("include file '{name}' not found")));
        };
        let text = std::fs::read_to_string(&path)
            .map_err(|e| FrontendError::new(first.span, format!("cannot read '{}': {e}", path.display())))?;
        let id = self.sources.add(name, Some(path), text);
        self.process_file(id, depth + 1)
    }

    fn eval_condition(&self, args: &[Token], at: SourceSpan) -> Result<bool, FrontendError> {
        // Resolve `defined` before expansion so its operand is not expanded.
        let mut resolved = Vec::new();
        let mut k = 0;
        while k < args.len() {
            let t = &args[k];
            if t.is_ident() && t.text == "defined" {
                let (name, used) = match (args.get(k + 1), args.get(k + 2), args.get(k + 3)) {
                    (Some(open), Some(n), Some(close)) if open.is_punct("(") && close.is_punct(")") => (n, 4),
                    (Some(n), _, _) if n.kind == TokenKind::Identifier || n.kind == TokenKind::Keyword => (n, 2),
                    _ => return Err(FrontendError::new(t.span, "malformed 'defined' operator")),
                };
                let mut one = Token::new(TokenKind::IntegerConstant, if self.macros.contains_key(&name.text) { "1" } else { "0" }, t.span);
                one.origin = t.origin.clone();
                resolved.push(one);
                k += used;
            } else {
                resolved.push(t.clone());
                k += 1;
            }
        }
        let expanded = self.expand(resolved)?;
        if expanded.is_empty() {
            return Err(FrontendError::new(at, "#if with no expression"));
        }
        let mut ev = PpExpr { toks: &expanded, pos: 0, at };
        let v = ev.conditional()?;
        if ev.pos != expanded.len() {
            return Err(FrontendError::new(expanded[ev.pos].span, format!("malformed constant expression near '{}'", expanded[ev.pos].text)));
        }
        Ok(v.value != 0)
    }

    /// Rescan-based expansion; a token is never expanded by a macro in its
    /// hide set, so self-reference stops after one step.
    fn expand(&self, input: Vec<Token>) -> Result<Vec<Token>, FrontendError> {
        let mut queue: VecDeque<Token> = input.into();
        let mut out = Vec::new();
        while let Some(tok) = queue.pop_front() {
            let def = match tok.kind {
                TokenKind::Identifier | TokenKind::Keyword => self.macros.get(&tok.text),
                _ => None,
            };
            let Some(def) = def.filter(|_| !tok.hideset.contains(&tok.text)) else {
                out.push(tok);
                continue;
            };
            let args = match &def.params {
                None => Vec::new(),
                Some(_) => {
                    if !queue.front().is_some_and(|t| t.is_punct("(")) {
                        out.push(tok);
                        continue;
                    }
                    collect_args(&mut queue, &tok)?
                }
            };
            let replaced = self.substitute(&tok, def, args)?;
            for t in replaced.into_iter().rev() {
                queue.push_front(t);
            }
        }
        Ok(out)
    }

    fn substitute(&self, inv: &Token, def: &MacroDef, mut args: Vec<Vec<Token>>) -> Result<Vec<Token>, FrontendError> {
        let name = &inv.text;
        let params = def.params.clone().unwrap_or_default();
        if def.params.is_some() {
            if args.len() == 1 && args[0].is_empty() && params.is_empty() && !def.variadic {
                args.clear();
            }
            let ok = if def.variadic { args.len() >= params.len() } else { args.len() == params.len() };
            if !ok {
                return Err(FrontendError::new(
                    inv.span,
                    format!("macro '{name}' expects {} argument(s), got {}", params.len(), args.len()),
                ));
            }
            if def.variadic {
                let extra: Vec<Vec<Token>> = args.drain(params.len().min(args.len())..).collect();
                let mut joined = Vec::new();
                for (i, a) in extra.into_iter().enumerate() {
                    if i > 0 {
                        joined.push(Token::new(TokenKind::Punctuator, ",", inv.span));
                    }
                    joined.extend(a);
                }
                args.push(joined);
            }
        }
        let mut all_params = params.clone();
        if def.variadic {
            all_params.push("__VA_ARGS__".to_string());
        }
        let origin = inv.origin.pushed(MacroFrame { name: name.clone(), definition: def.definition });
        if origin.chain.len() > MAX_PREPROCESS_DEPTH {
            return Err(FrontendError::new(inv.span, format!("macro expansion nested deeper than {MAX_PREPROCESS_DEPTH}")));
        }
        let mut hideset = inv.hideset.clone();
        hideset.push(name.clone());

        let param_index = |t: &Token| {
            if t.is_ident() {
                all_params.iter().position(|p| *p == t.text)
            } else {
                None
            }
        };
        let from_body = |t: &Token| {
            let mut n = t.clone();
            n.span = inv.span;
            n.origin = origin.clone();
            n.hideset = hideset.clone();
            n.trivia.clear();
            n.line_start = false;
            n
        };
        let from_arg = |t: &Token| {
            let mut n = t.clone();
            for h in &hideset {
                if !n.hideset.contains(h) {
                    n.hideset.push(h.clone());
                }
            }
            n.line_start = false;
            n
        };

        // Pieces are either plain tokens or markers for `##`.
        let mut pieces: Vec<Option<Token>> = Vec::new();
        let body = &def.body;
        let mut k = 0;
        while k < body.len() {
            let t = &body[k];
            if def.params.is_some() && t.is_punct("#") {
                if let Some(p) = body.get(k + 1).and_then(param_index) {
                    let mut s = from_body(t);
                    s.kind = TokenKind::StringLiteral;
                    s.text = stringify(&args[p]);
                    pieces.push(Some(s));
                    k += 2;
                    continue;
                }
            }
            if t.is_punct("##") {
                pieces.push(None);
                k += 1;
                continue;
            }
            if let Some(p) = param_index(t) {
                let pasted = body.get(k + 1).is_some_and(|n| n.is_punct("##"))
                    || (k > 0 && body[k - 1].is_punct("##"));
                let arg = if pasted { args[p].clone() } else { self.expand(args[p].clone())? };
                if pasted && arg.is_empty() {
                    pieces.push(Some(Token::new(TokenKind::Punctuator, "", inv.span)));
                }
                let mut first = true;
                for a in &arg {
                    let mut n = from_arg(a);
                    if first {
                        n.leading_space = t.leading_space;
                        first = false;
                    }
                    pieces.push(Some(n));
                }
            } else {
                pieces.push(Some(from_body(t)));
            }
            k += 1;
        }

        // Resolve token pasting left to right.
        let mut result: Vec<Token> = Vec::new();
        let mut k = 0;
        while k < pieces.len() {
            match &pieces[k] {
                Some(t) => result.push(t.clone()),
                None => {
                    let left = result.pop().ok_or_else(|| FrontendError::new(inv.span, "'##' at start of macro body"))?;
                    let right = pieces
                        .get(k + 1)
                        .cloned()
                        .flatten()
                        .ok_or_else(|| FrontendError::new(inv.span, "'##' at end of macro body"))?;
                    k += 1;
                    let text = format!("{}{}", left.text, right.text);
                    if text.is_empty() {
                        k += 1;
                        continue;
                    }
                    let relexed = lex(&text, inv.span.file)
                        .ok()
                        .filter(|v| v.len() == 1)
                        .ok_or_else(|| FrontendError::new(inv.span, format!("pasting forms '{text}', an invalid token")))?;
                    let mut n = from_body(&left);
                    n.kind = relexed[0].kind;
                    n.text = text;
                    result.push(n);
                }
            }
            k += 1;
        }
        result.retain(|t| !t.text.is_empty());
        Ok(result)
    }
}

fn collect_args(queue: &mut VecDeque<Token>, inv: &Token) -> Result<Vec<Vec<Token>>, FrontendError> {
    queue.pop_front(); // '('
    let mut args = vec![Vec::new()];
    let mut depth = 0usize;
    loop {
        let t = queue
            .pop_front()
            .ok_or_else(|| FrontendError::new(inv.span, format!("unterminated invocation of macro '{}'", inv.text)))?;
        if t.is_punct("(") {
            depth += 1;
        } else if t.is_punct(")") {
            if depth == 0 {
                break;
            }
            depth -= 1;
        } else if t.is_punct(",") && depth == 0 {
            args.push(Vec::new());
            continue;
        }
        args.last_mut().expect("non-empty").push(t);
    }
    Ok(args)
}

fn stringify(arg: &[Token]) -> String {
    let mut s = String::from("\"");
    for (i, t) in arg.iter().enumerate() {
        if i > 0 && t.leading_space {
            s.push(' ');
        }
        if matches!(t.kind, TokenKind::StringLiteral | TokenKind::CharacterConstant) {
            for c in t.text.chars() {
                if c == '"' || c == '\\' {
                    s.push('\\');
                }
                s.push(c);
            }
        } else {
            s.push_str(&t.text);
        }
    }
    s.push('"');
    s
}

fn split_lines(toks: &[Token]) -> Vec<&[Token]> {
    let mut lines = Vec::new();
    let mut start = 0;
    for k in 1..=toks.len() {
        if k == toks.len() || toks[k].line_start {
            if k > start {
                lines.push(&toks[start..k]);
            }
            start = k;
        }
    }
    lines
}

#[derive(Clone, Copy)]
struct PpValue {
    value: i128,
    unsigned: bool,
}

/// Evaluator for `#if` expressions in 64-bit two's complement.
struct PpExpr<'a> {
    toks: &'a [Token],
    pos: usize,
    at: SourceSpan,
}

impl PpExpr<'_> {
    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn err(&self, msg: &str) -> FrontendError {
        let span = self.peek().map_or(self.at, |t| t.span);
        FrontendError::new(span, format!("malformed constant expression: {msg}"))
    }

    fn eat(&mut self, p: &str) -> bool {
        if self.peek().is_some_and(|t| t.is_punct(p)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn check(&self, v: i128, unsigned: bool) -> Result<PpValue, FrontendError> {
        if unsigned {
            Ok(PpValue { value: crate::dialect::wrap(v, 64, false), unsigned })
        } else if crate::dialect::fits(v, 64, true) {
            Ok(PpValue { value: v, unsigned })
        } else {
            Err(FrontendError::new(self.at, "integer overflow in constant expression"))
        }
    }

    fn conditional(&mut self) -> Result<PpValue, FrontendError> {
        let c = self.binary(0)?;
        if self.eat("?") {
            let a = self.conditional()?;
            if !self.eat(":") {
                return Err(self.err("expected ':'"));
            }
            let b = self.conditional()?;
            let unsigned = a.unsigned || b.unsigned;
            let v = if c.value != 0 { a } else { b };
            return Ok(PpValue { unsigned, ..v });
        }
        Ok(c)
    }

    fn binary(&mut self, min_prec: u8) -> Result<PpValue, FrontendError> {
        let mut lhs = self.unary()?;
        loop {
            let Some(t) = self.peek() else { break };
            if t.kind != TokenKind::Punctuator {
                break;
            }
            let Some(prec) = binary_precedence(&t.text) else { break };
            if prec < min_prec {
                break;
            }
            let op = t.text.clone();
            self.pos += 1;
            let rhs = self.binary(prec + 1)?;
            lhs = self.apply(&op, lhs, rhs)?;
        }
        Ok(lhs)
    }

    fn apply(&self, op: &str, a: PpValue, b: PpValue) -> Result<PpValue, FrontendError> {
        let u = a.unsigned || b.unsigned;
        let (x, y) = if u {
            (crate::dialect::wrap(a.value, 64, false), crate::dialect::wrap(b.value, 64, false))
        } else {
            (a.value, b.value)
        };
        let bool_v = |c: bool| PpValue { value: c as i128, unsigned: false };
        Ok(match op {
            "*" => self.check(x * y, u)?,
            "/" | "%" => {
                if y == 0 {
                    return Err(FrontendError::new(self.at, "division by zero in constant expression"));
                }
                self.check(if op == "/" { x / y } else { x % y }, u)?
            }
            "+" => self.check(x + y, u)?,
            "-" => self.check(x - y, u)?,
            "<<" | ">>" => {
                if !(0..64).contains(&b.value) {
                    return Err(FrontendError::new(self.at, "shift count out of range in constant expression"));
                }
                let v = if op == "<<" { x << b.value } else { x >> b.value };
                let unsigned = a.unsigned;
                if unsigned {
                    PpValue { value: crate::dialect::wrap(v, 64, false), unsigned }
                } else {
                    self.check(v, false)?
                }
            }
            "<" => bool_v(x < y),
            ">" => bool_v(x > y),
            "<=" => bool_v(x <= y),
            ">=" => bool_v(x >= y),
            "==" => bool_v(x == y),
            "!=" => bool_v(x != y),
            "&" => PpValue { value: x & y, unsigned: u },
            "^" => PpValue { value: x ^ y, unsigned: u },
            "|" => PpValue { value: x | y, unsigned: u },
            "&&" => bool_v(x != 0 && y != 0),
            "||" => bool_v(x != 0 || y != 0),
            _ => return Err(self.err("unsupported operator")),
        })
    }

    fn unary(&mut self) -> Result<PpValue, FrontendError> {
        let Some(t) = self.peek().cloned() else {
            return Err(self.err("unexpected end of expression"));
        };
        self.pos += 1;
        match t.kind {
            TokenKind::Punctuator => match t.text.as_str() {
                "(" => {
                    let v = self.conditional()?;
                    if !self.eat(")") {
                        return Err(self.err("expected ')'"));
                    }
                    Ok(v)
                }
                "-" => {
                    let v = self.unary()?;
                    self.check(-v.value, v.unsigned)
                }
                "+" => self.unary(),
                "!" => {
                    let v = self.unary()?;
                    Ok(PpValue { value: (v.value == 0) as i128, unsigned: false })
                }
                "~" => {
                    let v = self.unary()?;
                    let value = if v.unsigned { crate::dialect::wrap(!v.value, 64, false) } else { !v.value };
                    Ok(PpValue { value, unsigned: v.unsigned })
                }
                _ => Err(FrontendError::new(t.span, format!("malformed constant expression near '{}'", t.text))),
            },
            TokenKind::IntegerConstant => {
                let (value, unsigned) = parse_int_literal(&t.text)
                    .ok_or_else(|| FrontendError::new(t.span, format!("invalid integer constant '{}'", t.text)))?;
                Ok(PpValue { value: value as i128, unsigned })
            }
            TokenKind::CharacterConstant => {
                let v = parse_char_literal(&t.text)
                    .ok_or_else(|| FrontendError::new(t.span, format!("invalid character constant {}", t.text)))?;
                Ok(PpValue { value: v as i128, unsigned: false })
            }
            // Identifiers left after expansion evaluate to 0.
            TokenKind::Identifier | TokenKind::Keyword => Ok(PpValue { value: 0, unsigned: false }),
            _ => Err(FrontendError::new(t.span, format!("malformed constant expression near '{}'", t.text))),
        }
    }
}

fn binary_precedence(op: &str) -> Option<u8> {
    Some(match op {
        "||" => 1,
        "&&" => 2,
        "|" => 3,
        "^" => 4,
        "&" => 5,
        "==" | "!=" => 6,
        "<" | ">" | "<=" | ">=" => 7,
        "<<" | ">>" => 8,
        "+" | "-" => 9,
        "*" | "/" | "%" => 10,
        _ => return None,
    })
}

/// Parse a C integer constant; returns the value and whether it carries a
/// `u`/`U` suffix.
pub fn parse_int_literal(text: &str) -> Option<(u64, bool)> {
    let lower = text.to_ascii_lowercase();
    let digits_end = lower.trim_end_matches(['u', 'l']).len();
    let (digits, suffix) = lower.split_at(digits_end);
    if !matches!(suffix, "" | "u" | "l" | "ul" | "lu" | "ll" | "ull" | "llu") {
        return None;
    }
    let value = if let Some(hex) = digits.strip_prefix("0x") {
        u64::from_str_radix(hex, 16).ok()?
    } else if digits.len() > 1 && digits.starts_with('0') {
        u64::from_str_radix(&digits[1..], 8).ok()?
    } else {
        digits.parse::<u64>().ok()?
    };
    Some((value, suffix.contains('u')))
}

/// Decode one escape sequence starting after the backslash.
pub(crate) fn decode_escape(chars: &[char], i: &mut usize) -> Option<u32> {
    let c = *chars.get(*i)?;
    *i += 1;
    Some(match c {
        'n' => 10,
        't' => 9,
        'r' => 13,
        '0'..='7' => {
            let mut v = c.to_digit(8)?;
            for _ in 0..2 {
                match chars.get(*i).and_then(|d| d.to_digit(8)) {
                    Some(d) => {
                        v = v * 8 + d;
                        *i += 1;
                    }
                    None => break,
                }
            }
            v
        }
        'x' => {
            let mut v = 0u32;
            let start = *i;
            while let Some(d) = chars.get(*i).and_then(|d| d.to_digit(16)) {
                v = v.wrapping_mul(16).wrapping_add(d);
                *i += 1;
            }
            if *i == start {
                return None;
            }
            v
        }
        'a' => 7,
        'b' => 8,
        'f' => 12,
        'v' => 11,
        '\\' | '\'' | '"' | '?' => c as u32,
        _ => return None,
    })
}

/// Value of a character constant as an `int` (plain char is signed).
pub fn parse_char_literal(text: &str) -> Option<i64> {
    let inner: Vec<char> = text.strip_prefix('\'')?.strip_suffix('\'')?.chars().collect();
    let mut i = 1;
    let v = match inner.first()? {
        '\\' => decode_escape(&inner, &mut i)?,
        c => *c as u32,
    };
    if i != inner.len() {
        return None;
    }
    Some(crate::dialect::wrap(v as i128, 8, true) as i64)
}

/// Bytes of a string literal, without the terminating NUL.
pub fn parse_string_literal(text: &str) -> Option<Vec<u8>> {
    let inner: Vec<char> = text.strip_prefix('"')?.strip_suffix('"')?.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < inner.len() {
        if inner[i] == '\\' {
            i += 1;
            out.push(decode_escape(&inner, &mut i)? as u8);
        } else {
            out.push(inner[i] as u8);
            i += 1;
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pp(src: &str) -> Preprocessed {
        preprocess(src, "t.c", None, &PreprocessOptions::default()).unwrap()
    }

    fn texts(p: &Preprocessed) -> Vec<String> {
        p.tokens.iter().map(|t| t.text.clone()).collect()
    }

    #[test]
    fn object_macro_records_origin() {
        let p = pp("#define SCALE 1\nx * SCALE;\n");
        assert_eq!(texts(&p), ["x", "*", "1", ";"]);
        let one = &p.tokens[2];
        assert_eq!(one.origin.chain.len(), 1);
        assert_eq!(one.origin.chain[0].name, "SCALE");
        assert_eq!(one.origin.chain[0].definition.line, 1);
        assert!(p.tokens[0].origin.is_direct());
    }

    #[test]
    fn no_directives_is_identity() {
        let src = "int f(void) { return 1 + 2; }";
        let p = pp(src);
        let lexed = lex(src, FileId(0)).unwrap();
        assert_eq!(p.tokens.len(), lexed.len());
        for (a, b) in p.tokens.iter().zip(&lexed) {
            assert_eq!(a.text, b.text);
            assert_eq!(a.span, b.span);
            assert!(a.origin.is_direct());
        }
    }

    #[test]
    fn self_reference_is_painted_blue() {
        let p = pp("#define A A\nA;\n");
        assert_eq!(texts(&p), ["A", ";"]);
        assert_eq!(p.tokens[0].origin.render(), "A");
    }

    #[test]
    fn mutual_recursion_terminates() {
        let p = pp("#define A B\n#define B A\nA;\n");
        assert_eq!(texts(&p), ["A", ";"]);
        assert_eq!(p.tokens[0].origin.render(), "A>B");
    }

    #[test]
    fn function_like_macro_args_keep_their_origin() {
        let p = pp("#define ADD0(v) (v + 0)\nADD0(x);\n");
        assert_eq!(texts(&p), ["(", "x", "+", "0", ")", ";"]);
        assert!(p.tokens[1].origin.is_direct());
        assert_eq!(p.tokens[3].origin.render(), "ADD0");
    }

    #[test]
    fn nested_expansion_chain() {
        let p = pp("#define ZERO 0\n#define OFFSET ZERO\nx + OFFSET;\n");
        assert_eq!(p.tokens[2].origin.render(), "OFFSET>ZERO");
    }

    #[test]
    fn conditionals() {
        let p = pp("#define X 2\n#if X > 1 && defined(X)\na\n#elif 1\nb\n#else\nc\n#endif\n#ifndef Y\nd\n#endif\n");
        assert_eq!(texts(&p), ["a", "d"]);
        assert_eq!(p.conditional_lines.len(), 6);
    }

    #[test]
    fn command_line_defines() {
        let opts = PreprocessOptions { defines: vec![("DO_X".into(), None), ("N".into(), Some("4".into()))], ..Default::default() };
        let p = preprocess("#ifdef DO_X\nN\n#endif\n", "t.c", None, &opts).unwrap();
        assert_eq!(p.tokens.len(), 1);
        assert_eq!(p.tokens[0].text, "4");
        assert_eq!(p.tokens[0].origin.render(), "N");
    }

    #[test]
    fn stringify_and_paste() {
        let p = pp("#define S(a) #a\n#define CAT(a,b) a##b\nS(x + 1) CAT(foo,bar)\n");
        assert_eq!(texts(&p), ["\"x + 1\"", "foobar"]);
    }

    #[test]
    fn errors() {
        let e = |src: &str| preprocess(src, "t.c", None, &PreprocessOptions::default()).unwrap_err().message;
        assert!(e("#if 1\nx\n").contains("unterminated conditional"));
        assert!(e("#frobnicate\n").contains("unknown directive"));
        assert!(e("#if 1 +\n#endif\n").contains("malformed constant expression"));
        assert!(e("#if 9223372036854775807 + 1\n#endif\n").contains("overflow"));
        assert!(e("#include \"nope.h\"\n").contains("not found"));
    }

    #[test]
    fn skipped_region_ignores_unknown_directives() {
        let p = pp("#if 0\n#frobnicate\n#endif\nok\n");
        assert_eq!(texts(&p), ["ok"]);
    }

    #[test]
    fn system_include_is_recorded_not_read() {
        let p = pp("#include <stdio.h>\nx\n");
        assert_eq!(p.system_includes[0].0, "stdio.h");
        assert_eq!(texts(&p), ["x"]);
    }

    #[test]
    fn include_depth_limit() {
        let dir = std::env::temp_dir().join(format!("minicheck-pp-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(dir.join("self.h"), "#include \"self.h\"\n").unwrap();
        let main = dir.join("main.c");
        std::fs::write(&main, "#include \"self.h\"\n").unwrap();
        let err = preprocess("#include \"self.h\"\n", "main.c", Some(&main), &PreprocessOptions::default()).unwrap_err();
        assert!(err.message.contains("nested deeper than 32"));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn literal_decoding() {
        assert_eq!(parse_int_literal("1U"), Some((1, true)));
        assert_eq!(parse_int_literal("0x1F"), Some((31, false)));
        assert_eq!(parse_int_literal("017"), Some((15, false)));
        assert_eq!(parse_int_literal("12xyz"), None);
        assert_eq!(parse_char_literal("'a'"), Some(97));
        assert_eq!(parse_char_literal("'\\n'"), Some(10));
        assert_eq!(parse_char_literal("'\\xff'"), Some(-1));
        assert_eq!(parse_string_literal("\"a\\0b\""), Some(vec![b'a', 0, b'b']));
    }
}
