//! Java tokenizer.
//!
//! Produces a flat token stream with byte offsets and 1-based line numbers.
//! Comments are kept as tokens so the formatter can re-emit them; the parser
//! filters them out. `>` is always emitted as a single-character token so that
//! nested generic closers (`>>`, `>>>`) need no special handling.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Ident,
    Number,
    Str,
    TextBlock,
    Char,
    Punct,
    LineComment,
    BlockComment,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub start: usize,
    pub end: usize,
    pub line: usize,
    pub end_line: usize,
}

impl Token {
    pub fn is(&self, s: &str) -> bool {
        matches!(self.kind, TokenKind::Punct | TokenKind::Ident) && self.text == s
    }

    pub fn is_ident(&self) -> bool {
        self.kind == TokenKind::Ident && !is_keyword(&self.text)
    }

    pub fn is_comment(&self) -> bool {
        matches!(self.kind, TokenKind::LineComment | TokenKind::BlockComment)
    }

    pub fn is_wordlike(&self) -> bool {
        matches!(self.kind, TokenKind::Ident | TokenKind::Number | TokenKind::Str | TokenKind::TextBlock | TokenKind::Char)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for LexError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

const KEYWORDS: &[&str] = &[
    "abstract",
    "assert",
    "boolean",
    "break",
    "byte",
    "case",
    "catch",
    "char",
    "class",
    "const",
    "continue",
    "default",
    "do",
    "double",
    "else",
    "enum",
    "extends",
    "final",
    "finally",
    "float",
    "for",
    "goto",
    "if",
    "implements",
    "import",
    "instanceof",
    "int",
    "interface",
    "long",
    "native",
    "new",
    "package",
    "private",
    "protected",
    "public",
    "return",
    "short",
    "static",
    "strictfp",
    "super",
    "switch",
    "synchronized",
    "this",
    "throw",
    "throws",
    "transient",
    "try",
    "void",
    "volatile",
    "while",
    "true",
    "false",
    "null",
];

pub const PRIMITIVES: &[&str] = &["boolean", "byte", "char", "short", "int", "long", "float", "double", "void"];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

// Longest first. `>`-family operators are deliberately absent except `>=`.
const PUNCTS: &[&str] = &["<<=", "...", "->", "::", "++", "--", "&&", "||", "==", "!=", "<=", ">=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<"];

pub fn tokenize(src: &str) -> Result<Vec<Token>, LexError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1;
    while i < bytes.len() {
        let c = bytes[i];
        if c == b'\n' {
            line += 1;
            i += 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let start_line = line;
        let kind;
        if c == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            kind = TokenKind::LineComment;
        } else if c == b'/' && bytes.get(i + 1) == Some(&b'*') {
            i += 2;
            loop {
                if i + 1 >= bytes.len() {
                    return Err(LexError { line: start_line, message: "unterminated block comment".into() });
                }
                if bytes[i] == b'*' && bytes[i + 1] == b'/' {
                    i += 2;
                    break;
                }
                if bytes[i] == b'\n' {
                    line += 1;
                }
                i += 1;
            }
            kind = TokenKind::BlockComment;
        } else if src[i..].starts_with("\"\"\"") {
            i += 3;
            loop {
                if i >= bytes.len() {
                    return Err(LexError { line: start_line, message: "unterminated text block".into() });
                }
                if bytes[i] == b'\\' {
                    i += 2;
                    continue;
                }
                if src[i..].starts_with("\"\"\"") {
                    i += 3;
                    break;
                }
                if bytes[i] == b'\n' {
                    line += 1;
                }
                i += 1;
            }
            kind = TokenKind::TextBlock;
        } else if c == b'"' || c == b'\'' {
            i += 1;
            loop {
                if i >= bytes.len() || bytes[i] == b'\n' {
                    return Err(LexError { line: start_line, message: "unterminated literal".into() });
                }
                if bytes[i] == b'\\' {
                    i += 2;
                    continue;
                }
                if bytes[i] == c {
                    i += 1;
                    break;
                }
                i += 1;
            }
            kind = if c == b'"' { TokenKind::Str } else { TokenKind::Char };
        } else if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            i += 1;
            while i < bytes.len() {
                let d = bytes[i];
                let exp_sign = (d == b'+' || d == b'-')
                    && matches!(bytes[i - 1], b'e' | b'E' | b'p' | b'P')
                    && !src[start..i].starts_with("0x")
                    && !src[start..i].starts_with("0X");
                if d.is_ascii_alphanumeric() || d == b'_' || d == b'.' || exp_sign {
                    i += 1;
                } else {
                    break;
                }
            }
            kind = TokenKind::Number;
        } else if c == b'_' || c == b'$' || c.is_ascii_alphabetic() || c >= 0x80 {
            while i < bytes.len() {
                let d = bytes[i];
                if d == b'_' || d == b'$' || d.is_ascii_alphanumeric() {
                    i += 1;
                } else if d >= 0x80 {
                    let ch = src[i..].chars().next().unwrap();
                    if ch.is_alphanumeric() {
                        i += ch.len_utf8();
                    } else {
                        break;
                    }
                } else {
                    break;
                }
            }
            if i == start {
                let ch = src[i..].chars().next().unwrap();
                return Err(LexError { line, message: format!("unexpected character {ch:?}") });
            }
            kind = TokenKind::Ident;
        } else {
            let rest = &src[i..];
            if let Some(p) = PUNCTS.iter().find(|p| rest.starts_with(**p)) {
                i += p.len();
            } else if b"{}()[];,.=<>!~?:+-*/&|^%@".contains(&c) {
                i += 1;
            } else {
                let ch = rest.chars().next().unwrap();
                return Err(LexError { line, message: format!("unexpected character {ch:?}") });
            }
            kind = TokenKind::Punct;
        }
        out.push(Token { kind, text: src[start..i].to_string(), start, end: i, line: start_line, end_line: line });
    }
    Ok(out)
}

/// Joins tokens into compact single-line text: a space only between two
/// word-like tokens.
pub fn compact_text(tokens: &[Token]) -> String {
    let mut out = String::new();
    let mut prev: Option<&Token> = None;
    for t in tokens.iter().filter(|t| !t.is_comment()) {
        if let Some(p) = prev {
            if p.is_wordlike() && t.is_wordlike() {
                out.push(' ');
            }
        }
        out.push_str(&t.text);
        prev = Some(t);
    }
    out
}
