//! Tokenizer for the model text format. Tracks 1-based line/column positions
//! for every token so later stages can report precise locations.

use super::{Diagnostic, Severity};

/// Source position, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(line: u32, col: u32) -> Self {
        Self { line, col }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Ident(String),
    Number(f64),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Colon,
    Semi,
    Plus,
    Minus,
    Star,
    Eof,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Number(n) => format!("number `{n}`"),
            TokenKind::LBrace => "`{`".into(),
            TokenKind::RBrace => "`}`".into(),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
            TokenKind::Colon => "`:`".into(),
            TokenKind::Semi => "`;`".into(),
            TokenKind::Plus => "`+`".into(),
            TokenKind::Minus => "`-`".into(),
            TokenKind::Star => "`*`".into(),
            TokenKind::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

pub fn lex(text: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut tokens = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut pos = 0usize;
    let mut line = 1u32;
    let mut col = 1u32;

    macro_rules! bump {
        () => {{
            if chars[pos] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            pos += 1;
        }};
    }

    while pos < chars.len() {
        let c = chars[pos];
        let span = Span::new(line, col);
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '/' && pos + 1 < chars.len() && chars[pos + 1] == '/' {
            while pos < chars.len() && chars[pos] != '\n' {
                bump!();
            }
            continue;
        }
        let kind = match c {
            '{' => Some(TokenKind::LBrace),
            '}' => Some(TokenKind::RBrace),
            '(' => Some(TokenKind::LParen),
            ')' => Some(TokenKind::RParen),
            ':' => Some(TokenKind::Colon),
            ';' => Some(TokenKind::Semi),
            '+' => Some(TokenKind::Plus),
            '-' => Some(TokenKind::Minus),
            '*' => Some(TokenKind::Star),
            _ => None,
        };
        if let Some(kind) = kind {
            bump!();
            tokens.push(Token { kind, span });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut name = String::new();
            while pos < chars.len() && (chars[pos].is_ascii_alphanumeric() || chars[pos] == '_') {
                name.push(chars[pos]);
                bump!();
            }
            tokens.push(Token { kind: TokenKind::Ident(name), span });
            continue;
        }
        if c.is_ascii_digit() {
            let mut raw = String::new();
            while pos < chars.len() && chars[pos].is_ascii_digit() {
                raw.push(chars[pos]);
                bump!();
            }
            if pos < chars.len() && chars[pos] == '.' {
                raw.push('.');
                bump!();
                if pos >= chars.len() || !chars[pos].is_ascii_digit() {
                    return Err(Diagnostic {
                        severity: Severity::Error,
                        message: "malformed number: expected digits after decimal point".into(),
                        line: span.line,
                        col: span.col,
                    });
                }
                while pos < chars.len() && chars[pos].is_ascii_digit() {
                    raw.push(chars[pos]);
                    bump!();
                }
            }
            if pos < chars.len() && (chars[pos] == 'e' || chars[pos] == 'E') {
                raw.push('e');
                bump!();
                if pos < chars.len() && (chars[pos] == '+' || chars[pos] == '-') {
                    raw.push(chars[pos]);
                    bump!();
                }
                if pos >= chars.len() || !chars[pos].is_ascii_digit() {
                    return Err(Diagnostic {
                        severity: Severity::Error,
                        message: "malformed number: expected digits in exponent".into(),
                        line: span.line,
                        col: span.col,
                    });
                }
                while pos < chars.len() && chars[pos].is_ascii_digit() {
                    raw.push(chars[pos]);
                    bump!();
                }
            }
            let value: f64 = raw.parse().map_err(|_| Diagnostic {
                severity: Severity::Error,
                message: format!("malformed number `{raw}`"),
                line: span.line,
                col: span.col,
            })?;
            tokens.push(Token { kind: TokenKind::Number(value), span });
            continue;
        }
        return Err(Diagnostic {
            severity: Severity::Error,
            message: format!("unexpected character `{c}`"),
            line: span.line,
            col: span.col,
        });
    }
    tokens.push(Token { kind: TokenKind::Eof, span: Span::new(line, col) });
    Ok(tokens)
}
