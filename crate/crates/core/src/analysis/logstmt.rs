//! Recognition of logging calls and the ordinal level scale.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::lexer::{compact_text, tokenize, Token, TokenKind};

/// SLF4J-style verbosity levels, least to most severe. `fatal` folds into
/// [`Level::Error`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Level {
    Trace,
    Debug,
    Info,
    Warn,
    Error,
}

impl Level {
    pub const ALL: [Level; 5] = [Level::Trace, Level::Debug, Level::Info, Level::Warn, Level::Error];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Largest ordinal distance reachable from this level on the scale.
    pub fn max_distance(self) -> usize {
        let top = Level::ALL.len() - 1;
        self.index().max(top - self.index())
    }

    pub fn distance(self, other: Level) -> usize {
        self.index().abs_diff(other.index())
    }

    pub fn from_method_name(name: &str) -> Option<Level> {
        match name.to_ascii_lowercase().as_str() {
            "trace" => Some(Level::Trace),
            "debug" => Some(Level::Debug),
            "info" => Some(Level::Info),
            "warn" => Some(Level::Warn),
            "error" | "fatal" => Some(Level::Error),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Level::Trace => "TRACE",
            Level::Debug => "DEBUG",
            Level::Info => "INFO",
            Level::Warn => "WARN",
            Level::Error => "ERROR",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Level {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Level::from_method_name(s).ok_or_else(|| format!("unknown level `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoggingStatement {
    pub level: Level,
    /// Static text with `{}` placeholders.
    pub template: String,
    pub variables: Vec<String>,
    /// 1-based line within the owning source text (0 when parsed standalone).
    pub line: usize,
    pub raw: String,
}

fn placeholder_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"%[-#+ 0,(]*\d*(?:\.\d+)?[a-zA-Z]|\{\d+\}").unwrap())
}

/// Rewrites printf-style (`%s`, `%.2f`) and indexed (`{0}`) placeholders to `{}`.
pub fn normalize_placeholders(template: &str) -> String {
    let escaped = template.replace("%%", "\u{0}");
    placeholder_re().replace_all(&escaped, "{}").replace('\u{0}', "%")
}

fn split_top_level<'t>(toks: &'t [Token], sep: &str) -> Vec<&'t [Token]> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut last = 0;
    for (i, t) in toks.iter().enumerate() {
        if t.kind != TokenKind::Punct {
            continue;
        }
        match t.text.as_str() {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => depth -= 1,
            s if s == sep && depth == 0 => {
                parts.push(&toks[last..i]);
                last = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&toks[last..]);
    parts
}

fn literal_content(t: &Token) -> Option<String> {
    match t.kind {
        TokenKind::Str => Some(t.text[1..t.text.len() - 1].to_string()),
        TokenKind::TextBlock => Some(t.text[3..t.text.len() - 3].trim().to_string()),
        _ => None,
    }
}

/// Parses `receiver.level(args...)`; returns `None` for anything else.
pub fn parse_log_statement(text: &str) -> Option<LoggingStatement> {
    let raw = text.trim().to_string();
    let toks: Vec<Token> = tokenize(&raw).ok()?.into_iter().filter(|t| !t.is_comment()).collect();
    let mut toks = toks.as_slice();
    if toks.last().is_some_and(|t| t.is(";")) {
        toks = &toks[..toks.len() - 1];
    }
    if toks.len() < 5 || !toks.last()?.is(")") {
        return None;
    }
    let mut depth = 0;
    let mut open = None;
    for i in (0..toks.len()).rev() {
        if toks[i].kind != TokenKind::Punct {
            continue;
        }
        match toks[i].text.as_str() {
            ")" => depth += 1,
            "(" => {
                depth -= 1;
                if depth == 0 {
                    open = Some(i);
                    break;
                }
            }
            _ => {}
        }
    }
    let open = open?;
    if open < 3 || !toks[open - 2].is(".") || toks[open - 1].kind != TokenKind::Ident {
        return None;
    }
    let level = Level::from_method_name(&toks[open - 1].text)?;
    let receiver = &toks[..open - 2];
    let mut d = 0i32;
    for t in receiver {
        if t.kind == TokenKind::Punct {
            match t.text.as_str() {
                "(" | "[" | "{" => d += 1,
                ")" | "]" | "}" => d -= 1,
                "=" | "+=" | "-=" | "?" | "->" | "+" if d == 0 => return None,
                _ => {}
            }
        }
    }
    let args_toks = &toks[open + 1..toks.len() - 1];
    let mut args: Vec<&[Token]> = if args_toks.is_empty() { Vec::new() } else { split_top_level(args_toks, ",") };
    if args.iter().any(|a| a.is_empty()) {
        return None;
    }

    // String.format("...", a, b) as the message argument
    if let Some(first) = args.first() {
        if first.len() >= 5 && first[0].text == "String" && first[1].is(".") && first[2].text == "format" && first[3].is("(") && first.last().unwrap().is(")") {
            let inner = split_top_level(&first[4..first.len() - 1], ",");
            if inner.iter().all(|a| !a.is_empty()) {
                let rest: Vec<&[Token]> = args[1..].to_vec();
                args = inner;
                args.extend(rest);
            }
        }
    }

    let mut template = String::new();
    let mut variables = Vec::new();
    let mut rest_start = 0;
    if let Some(first) = args.first() {
        let parts = split_top_level(first, "+");
        let has_literal = parts.iter().any(|p| p.len() == 1 && literal_content(&p[0]).is_some());
        if has_literal {
            for p in &parts {
                match (p.len(), p.first().and_then(literal_content)) {
                    (1, Some(lit)) => template.push_str(&lit),
                    _ => {
                        template.push_str("{}");
                        variables.push(compact_text(p));
                    }
                }
            }
            template = normalize_placeholders(&template);
            rest_start = 1;
        }
    }
    for a in &args[rest_start..] {
        variables.push(compact_text(a));
    }
    Some(LoggingStatement { level, template, variables, line: 0, raw })
}
