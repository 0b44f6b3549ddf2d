//! Name resolution, typing and the library profile.

pub mod consteval;
pub mod eof;
pub mod libc;
pub mod resolve;
pub mod types;

use std::path::Path;

use thiserror::Error;

use crate::frontend::lexer::lex;
use crate::frontend::parser::parse;
use crate::frontend::preprocess::{preprocess, PreprocessOptions};
use crate::frontend::{FrontendError, SourceSpan};

pub use eof::{eof_domain, EofClass, ReachingDef, ReachingDefs};
pub use libc::{LibcProfile, LibcTag};
pub use resolve::{resolve_and_type, FunctionInfo, Storage, Symbol, SymbolId, TypedUnit};
pub use types::{IntKind, TypeKind, TypeRepr};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {message}")]
pub struct SemaError {
    pub span: SourceSpan,
    pub message: String,
}

impl SemaError {
    pub fn new(span: SourceSpan, message: impl Into<String>) -> Self {
        SemaError { span, message: message.into() }
    }
}

/// Any error that stops a unit from being analyzed.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("{0}")]
    Frontend(#[from] FrontendError),
    #[error("{0}")]
    Sema(#[from] SemaError),
}

impl CompileError {
    pub fn span(&self) -> SourceSpan {
        match self {
            CompileError::Frontend(e) => e.span,
            CompileError::Sema(e) => e.span,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CompileError::Frontend(e) => &e.message,
            CompileError::Sema(e) => &e.message,
        }
    }
}

/// Preprocess, parse and type one source file against `profile`.
pub fn compile(
    source: &str,
    name: &str,
    path: Option<&Path>,
    opts: &PreprocessOptions,
    profile: &LibcProfile,
) -> Result<TypedUnit, CompileError> {
    let mut opts = opts.clone();
    let mut builtins = profile.macros.clone();
    builtins.append(&mut opts.builtin_macros);
    opts.builtin_macros = builtins;
    let mut pre = preprocess(source, name, path, &opts)?;
    let typedefs = profile.typedef_names();
    let ast = parse(&pre.tokens, &typedefs)?;
    let prelude_file = pre.sources.add_synthetic("<libc>", profile.prelude.clone());
    let prelude = parse(&lex(&profile.prelude, prelude_file)?, &typedefs)?;
    Ok(resolve_and_type(ast, pre, &prelude, profile)?)
}

/// `compile` with default options and profile; used heavily by tests.
pub fn compile_str(source: &str) -> Result<TypedUnit, CompileError> {
    compile(source, "input.c", None, &PreprocessOptions::default(), &LibcProfile::default())
}

#[cfg(test)]
mod tests;
