//! Maximal-munch C99 tokenizer.

use super::span::{FileId, SourceSpan};
use super::token::{is_keyword, Token, TokenKind};
use super::FrontendError;

const PUNCTUATORS: &[&str] = &[
    "...", "<<=", ">>=", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "*=",
    "/=", "%=", "+=", "-=", "&=", "^=", "|=", "##", "[", "]", "(", ")", "{", "}", ".", "&", "*",
    "+", "-", "~", "!", "/", "%", "<", ">", "^", "|", "?", ":", ";", "=", ",", "#",
];

struct Cursor {
    chars: Vec<char>,
    /// (line, column) of each logical character.
    pos: Vec<(u32, u32)>,
    i: usize,
}

impl Cursor {
    /// Removes backslash-newline splices, remembering physical positions.
    fn new(text: &str) -> Self {
        let raw: Vec<char> = text.chars().collect();
        let mut chars = Vec::with_capacity(raw.len());
        let mut pos = Vec::with_capacity(raw.len());
        let (mut line, mut col) = (1u32, 1u32);
        let mut k = 0;
        while k < raw.len() {
            let c = raw[k];
            if c == '\\' && raw.get(k + 1) == Some(&'\n') {
                k += 2;
                line += 1;
                col = 1;
                continue;
            }
            if c == '\\' && raw.get(k + 1) == Some(&'\r') && raw.get(k + 2) == Some(&'\n') {
                k += 3;
                line += 1;
                col = 1;
                continue;
            }
            if c == '\r' {
                k += 1;
                continue;
            }
            chars.push(c);
            pos.push((line, col));
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            k += 1;
        }
        Cursor { chars, pos, i: 0 }
    }

    fn peek(&self, n: usize) -> Option<char> {
        self.chars.get(self.i + n).copied()
    }

    fn at(&self, i: usize) -> (u32, u32) {
        self.pos.get(i).copied().unwrap_or_else(|| match self.pos.last() {
            Some(&(l, c)) => (l, c + 1),
            None => (1, 1),
        })
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars().enumerate().all(|(n, c)| self.peek(n) == Some(c))
    }
}

/// Tokenize `text`. Comments are kept as trivia on the following token.
pub fn lex(text: &str, file: FileId) -> Result<Vec<Token>, FrontendError> {
    let mut cur = Cursor::new(text);
    let mut out = Vec::new();
    let mut trivia = Vec::new();
    let mut line_start = true;
    let mut leading_space = false;

    let span_of = |cur: &Cursor, start: usize| {
        let (line, column) = cur.at(start);
        SourceSpan::new(file, line, column, (cur.i - start) as u32)
    };

    while let Some(c) = cur.peek(0) {
        if c == '\n' {
            line_start = true;
            leading_space = true;
            cur.i += 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            leading_space = true;
            cur.i += 1;
            continue;
        }
        let start = cur.i;
        if cur.starts_with("//") {
            while let Some(ch) = cur.peek(0) {
                if ch == '\n' {
                    break;
                }
                cur.i += 1;
            }
            trivia.push(cur.chars[start..cur.i].iter().collect());
            leading_space = true;
            continue;
        }
        if cur.starts_with("/*") {
            cur.i += 2;
            loop {
                if cur.peek(0).is_none() {
                    return Err(FrontendError::new(span_of(&cur, start), "unterminated comment"));
                }
                if cur.starts_with("*/") {
                    cur.i += 2;
                    break;
                }
                cur.i += 1;
            }
            trivia.push(cur.chars[start..cur.i].iter().collect());
            leading_space = true;
            continue;
        }

        let kind = if c.is_ascii_alphabetic() || c == '_' {
            while matches!(cur.peek(0), Some(ch) if ch.is_ascii_alphanumeric() || ch == '_') {
                cur.i += 1;
            }
            let word: String = cur.chars[start..cur.i].iter().collect();
            if is_keyword(&word) {
                TokenKind::Keyword
            } else {
                TokenKind::Identifier
            }
        } else if c.is_ascii_digit() || (c == '.' && matches!(cur.peek(1), Some(d) if d.is_ascii_digit())) {
            lex_number(&mut cur)
        } else if c == '"' || c == '\'' {
            lex_quoted(&mut cur, c).map_err(|msg| FrontendError::new(span_of(&cur, start), msg))?
        } else if let Some(p) = PUNCTUATORS.iter().find(|p| cur.starts_with(p)) {
            cur.i += p.len();
            TokenKind::Punctuator
        } else {
            cur.i += 1;
            return Err(FrontendError::new(
                span_of(&cur, start),
                format!("stray character '{}' in program", c.escape_default()),
            ));
        };

        let text: String = cur.chars[start..cur.i].iter().collect();
        let mut tok = Token::new(kind, text, span_of(&cur, start));
        tok.trivia = std::mem::take(&mut trivia);
        tok.line_start = line_start;
        tok.leading_space = leading_space;
        out.push(tok);
        line_start = false;
        leading_space = false;
    }
    Ok(out)
}

fn lex_number(cur: &mut Cursor) -> TokenKind {
    let start = cur.i;
    let hex = cur.starts_with("0x") || cur.starts_with("0X");
    let mut float = false;
    while let Some(ch) = cur.peek(0) {
        let exp = if hex { matches!(ch, 'p' | 'P') } else { matches!(ch, 'e' | 'E') };
        if exp && matches!(cur.peek(1), Some('+') | Some('-')) {
            float = true;
            cur.i += 2;
        } else if ch == '.' {
            float = true;
            cur.i += 1;
        } else if ch.is_ascii_alphanumeric() || ch == '_' {
            if exp {
                float = true;
            }
            cur.i += 1;
        } else {
            break;
        }
    }
    debug_assert!(cur.i > start);
    if float {
        TokenKind::FloatingConstant
    } else {
        TokenKind::IntegerConstant
    }
}

fn lex_quoted(cur: &mut Cursor, quote: char) -> Result<TokenKind, String> {
    cur.i += 1;
    loop {
        match cur.peek(0) {
            None | Some('\n') => {
                return Err(if quote == '"' {
                    "unterminated string literal".to_string()
                } else {
                    "unterminated character constant".to_string()
                })
            }
            Some('\\') => {
                if cur.peek(1).is_none() || cur.peek(1) == Some('\n') {
                    cur.i += 1;
                    continue;
                }
                cur.i += 2;
            }
            Some(ch) if ch == quote => {
                cur.i += 1;
                break;
            }
            Some(_) => cur.i += 1,
        }
    }
    Ok(if quote == '"' { TokenKind::StringLiteral } else { TokenKind::CharacterConstant })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<(TokenKind, String)> {
        lex(src, FileId(0)).unwrap().into_iter().map(|t| (t.kind, t.text)).collect()
    }

    #[test]
    fn shift_assign_statement() {
        use TokenKind::*;
        assert_eq!(
            kinds("mask <<= 1U;"),
            vec![
                (Identifier, "mask".into()),
                (Punctuator, "<<=".into()),
                (IntegerConstant, "1U".into()),
                (Punctuator, ";".into()),
            ]
        );
    }

    #[test]
    fn empty_input() {
        assert!(lex("", FileId(0)).unwrap().is_empty());
    }

    #[test]
    fn unterminated_string_reports_column_one() {
        let err = lex("\"abc", FileId(0)).unwrap_err();
        assert_eq!(err.message, "unterminated string literal");
        assert_eq!((err.span.line, err.span.column), (1, 1));
    }

    #[test]
    fn stray_character() {
        let err = lex("int @x;", FileId(0)).unwrap_err();
        assert!(err.message.contains("stray"));
        assert_eq!(err.span.column, 5);
    }

    #[test]
    fn comments_become_trivia() {
        let toks = lex("/* a */ x // b\n y", FileId(0)).unwrap();
        assert_eq!(toks.len(), 2);
        assert_eq!(toks[0].trivia, vec!["/* a */".to_string()]);
        assert_eq!(toks[1].trivia, vec!["// b".to_string()]);
        assert!(toks[1].line_start);
    }

    #[test]
    fn numbers() {
        use TokenKind::*;
        let k = kinds("0x1F 1.5f 1e-3 .5 10UL 0x1p+3");
        let ks: Vec<_> = k.iter().map(|(k, _)| *k).collect();
        assert_eq!(
            ks,
            vec![IntegerConstant, FloatingConstant, FloatingConstant, FloatingConstant, IntegerConstant, FloatingConstant]
        );
    }

    #[test]
    fn splice_keeps_physical_positions() {
        let toks = lex("a \\\n b", FileId(0)).unwrap();
        assert_eq!(toks[1].span.line, 2);
        assert!(!toks[1].line_start);
    }
}
