use std::fmt;

use serde::Serialize;

use super::span::SourceSpan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TokenKind {
    Identifier,
    Keyword,
    IntegerConstant,
    FloatingConstant,
    CharacterConstant,
    StringLiteral,
    Punctuator,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TokenKind::Identifier => "identifier",
            TokenKind::Keyword => "keyword",
            TokenKind::IntegerConstant => "integer-constant",
            TokenKind::FloatingConstant => "floating-constant",
            TokenKind::CharacterConstant => "character-constant",
            TokenKind::StringLiteral => "string-literal",
            TokenKind::Punctuator => "punctuator",
        };
        f.write_str(s)
    }
}

/// One macro expansion step: which macro, and where it was defined.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct MacroFrame {
    pub name: String,
    pub definition: SourceSpan,
}

/// The chain of macro expansions that produced a token, outermost first.
/// An empty chain means the token was written directly in the source.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize)]
pub struct MacroOrigin {
    pub chain: Vec<MacroFrame>,
}

impl MacroOrigin {
    pub fn direct() -> Self {
        MacroOrigin::default()
    }

    pub fn is_direct(&self) -> bool {
        self.chain.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.chain.iter().any(|f| f.name == name)
    }

    pub fn pushed(&self, frame: MacroFrame) -> MacroOrigin {
        let mut chain = self.chain.clone();
        chain.push(frame);
        MacroOrigin { chain }
    }

    /// `A>B` for a token produced by B inside A's expansion, `direct` otherwise.
    pub fn render(&self) -> String {
        if self.chain.is_empty() {
            "direct".to_string()
        } else {
            self.chain.iter().map(|f| f.name.as_str()).collect::<Vec<_>>().join(">")
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub span: SourceSpan,
    pub origin: MacroOrigin,
    /// Comments that preceded this token.
    pub trivia: Vec<String>,
    /// First token on its logical line (used to recognize directives).
    pub line_start: bool,
    /// Preceded by whitespace (used by stringification).
    pub leading_space: bool,
    /// Macros that must not expand this token again.
    pub(crate) hideset: Vec<String>,
}

impl Token {
    pub fn new(kind: TokenKind, text: impl Into<String>, span: SourceSpan) -> Self {
        Token {
            kind,
            text: text.into(),
            span,
            origin: MacroOrigin::direct(),
            trivia: Vec::new(),
            line_start: false,
            leading_space: false,
            hideset: Vec::new(),
        }
    }

    pub fn is_punct(&self, p: &str) -> bool {
        self.kind == TokenKind::Punctuator && self.text == p
    }

    pub fn is_keyword(&self, k: &str) -> bool {
        self.kind == TokenKind::Keyword && self.text == k
    }

    pub fn is_ident(&self) -> bool {
        self.kind == TokenKind::Identifier
    }
}

/// C99 keywords accepted by MiniC. `_Complex` and `_Imaginary` are left out:
/// they lex as identifiers and are then rejected as unknown types.
pub const KEYWORDS: &[&str] = &[
    "auto", "break", "case", "char", "const", "continue", "default", "do", "double", "else",
    "enum", "extern", "float", "for", "goto", "if", "inline", "int", "long", "register",
    "restrict", "return", "short", "signed", "sizeof", "static", "struct", "switch", "typedef",
    "union", "unsigned", "void", "volatile", "while", "_Bool",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}
