//! Lexing, preprocessing and parsing of MiniC source text.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod preprocess;
pub mod span;
pub mod token;

use thiserror::Error;

pub use span::{FileId, SourceMap, SourceSpan};
pub use token::{MacroFrame, MacroOrigin, Token, TokenKind};

/// A fatal lexing, preprocessing or syntax error.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {message}")]
pub struct FrontendError {
    pub span: SourceSpan,
    pub message: String,
}

impl FrontendError {
    pub fn new(span: SourceSpan, message: impl Into<String>) -> Self {
        FrontendError { span, message: message.into() }
    }
}
