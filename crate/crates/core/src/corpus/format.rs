//! Canonical re-indenter: two-space indent, one statement per line, K&R
//! braces. Token spacing is kept as a single space wherever the input had
//! whitespace.

use crate::analysis::lexer::{tokenize, Token, TokenKind};
use crate::analysis::AnalysisError;

const INDENT: &str = "  ";

#[derive(Clone, Copy)]
struct Frame {
    /// Statement block (as opposed to an inline array initializer).
    block: bool,
    /// Opened by `do`.
    do_body: bool,
    /// Inside a case group of a switch block.
    in_case: bool,
    /// Enclosing parenthesis depth, restored on close.
    outer_parens: usize,
}

struct Out {
    lines: Vec<String>,
    cur: String,
    fresh: bool,
}

impl Out {
    fn newline(&mut self) {
        if !self.fresh {
            self.lines.push(std::mem::take(&mut self.cur));
            self.fresh = true;
        }
    }

    fn push(&mut self, indent: usize, text: &str, space: bool) {
        if self.fresh {
            self.cur = INDENT.repeat(indent);
            self.fresh = false;
        } else if space {
            self.cur.push(' ');
        }
        self.cur.push_str(text);
    }
}

/// Strips a `class A { ... }` wrapper produced by an earlier pass.
fn unwrap_class_a(tokens: &[Token]) -> &[Token] {
    let n = tokens.len();
    if n >= 4 && tokens[0].is("class") && tokens[1].text == "A" && tokens[2].is("{") && tokens[n - 1].is("}") {
        let mut depth = 0i32;
        for (i, t) in tokens.iter().enumerate().skip(2) {
            if t.kind == TokenKind::Punct && t.text == "{" {
                depth += 1;
            } else if t.kind == TokenKind::Punct && t.text == "}" {
                depth -= 1;
                if depth == 0 {
                    return if i == n - 1 { &tokens[3..n - 1] } else { tokens };
                }
            }
        }
    }
    tokens
}

fn is_punct(t: &Token, s: &str) -> bool {
    t.kind == TokenKind::Punct && t.text == s
}

/// Formats `source` and returns the body lines indented by `base` levels.
pub(crate) fn format_lines(source: &str, base: usize) -> Result<Vec<String>, AnalysisError> {
    let all = tokenize(source).map_err(|e| AnalysisError::ParseFailure(e.to_string()))?;
    let toks = unwrap_class_a(&all);
    let mut out = Out { lines: Vec::new(), cur: String::new(), fresh: true };
    let mut frames: Vec<Frame> = Vec::new();
    let mut parens = 0usize;
    // tokens of the current line-level statement that begin a case label
    let mut label_pending = false;
    let mut annotation_end: Option<usize> = None;

    let depth_of = |frames: &[Frame]| frames.iter().map(|f| 1 + f.in_case as usize).sum::<usize>();

    for (i, t) in toks.iter().enumerate() {
        let prev = i.checked_sub(1).map(|p| &toks[p]);
        let next = toks.get(i + 1);
        let gap = prev.map_or("", |p| &source[p.end..t.start]);
        let space = !gap.is_empty() || prev.is_some_and(|p| is_punct(p, "}") && t.is_wordlike());
        let had_newline = gap.contains('\n');

        if let Some(end) = annotation_end {
            if end == i {
                annotation_end = None;
                if had_newline {
                    out.newline();
                }
            }
        }
        if prev.is_some_and(|p| p.kind == TokenKind::BlockComment) && had_newline {
            out.newline();
        }

        // case labels sit one level above their statements
        let starts_label = out.fresh
            && parens == 0
            && frames.last().is_some_and(|f| f.block)
            && (t.is("case") || (t.is("default") && next.is_some_and(|n| is_punct(n, ":") || is_punct(n, "->"))));
        if starts_label {
            if let Some(f) = frames.last_mut() {
                f.in_case = false;
            }
            label_pending = true;
        }

        if t.kind == TokenKind::Punct {
            match t.text.as_str() {
                "{" => {
                    let in_initializer = frames.last().is_some_and(|f| !f.block);
                    let inline = prev.is_some_and(|p| {
                        is_punct(p, "]") || is_punct(p, "=") || is_punct(p, "(") || (in_initializer && (is_punct(p, "{") || is_punct(p, ",")))
                    });
                    let do_body = prev.is_some_and(|p| p.is("do"));
                    if inline {
                        out.push(depth_of(&frames) + base, "{", space);
                        frames.push(Frame { block: false, do_body: false, in_case: false, outer_parens: parens });
                        continue;
                    }
                    out.push(depth_of(&frames) + base, "{", true);
                    frames.push(Frame { block: true, do_body, in_case: false, outer_parens: parens });
                    parens = 0;
                    if next.is_some_and(|n| is_punct(n, "}")) {
                        continue;
                    }
                    out.newline();
                    continue;
                }
                "}" => {
                    let f = frames.pop().unwrap_or(Frame { block: true, do_body: false, in_case: false, outer_parens: 0 });
                    if f.block {
                        parens = f.outer_parens;
                    }
                    if !f.block {
                        out.push(depth_of(&frames) + base, "}", space);
                        continue;
                    }
                    let empty = prev.is_some_and(|p| is_punct(p, "{"));
                    if !empty {
                        out.newline();
                    }
                    out.push(depth_of(&frames) + base, "}", false);
                    let keep = next.is_some_and(|n| {
                        n.is("else")
                            || n.is("catch")
                            || n.is("finally")
                            || (n.is("while") && f.do_body)
                            || is_punct(n, ";")
                            || is_punct(n, ",")
                            || is_punct(n, ")")
                            || is_punct(n, ".")
                    });
                    if !keep {
                        out.newline();
                    }
                    continue;
                }
                "(" => parens += 1,
                ")" => parens = parens.saturating_sub(1),
                _ => {}
            }
        }

        if t.kind == TokenKind::Punct && t.text == "@" && next.is_some_and(|n| n.kind == TokenKind::Ident && n.text != "interface") {
            // `@Name` or `@Name(...)`; a newline after it is kept
            let mut j = i + 2;
            while j + 1 < toks.len() && is_punct(&toks[j], ".") {
                j += 2;
            }
            if toks.get(j).is_some_and(|n| is_punct(n, "(")) {
                let mut d = 0usize;
                while j < toks.len() {
                    if is_punct(&toks[j], "(") {
                        d += 1;
                    } else if is_punct(&toks[j], ")") {
                        d -= 1;
                        if d == 0 {
                            j += 1;
                            break;
                        }
                    }
                    j += 1;
                }
            }
            annotation_end = Some(j);
        }

        let indent = depth_of(&frames) + base;
        out.push(indent, &t.text, space);

        match t.kind {
            TokenKind::LineComment => out.newline(),
            TokenKind::Punct if t.text == ";" && parens == 0 => {
                if !next.is_some_and(|n| n.kind == TokenKind::LineComment && !source[t.end..n.start].contains('\n')) {
                    out.newline();
                }
            }
            TokenKind::Punct if label_pending && parens == 0 && (t.text == ":" || t.text == "->") => {
                label_pending = false;
                if t.text == ":" {
                    if let Some(f) = frames.last_mut() {
                        f.in_case = true;
                    }
                    out.newline();
                }
            }
            _ => {}
        }
    }
    out.newline();
    Ok(out.lines)
}

/// Re-indents a method and embeds it as the only member of `class A`.
pub fn wrap_in_class_a(source: &str) -> Result<String, AnalysisError> {
    let lines = format_lines(source, 1)?;
    let mut s = String::from("class A {\n");
    for l in lines {
        s.push_str(&l);
        s.push('\n');
    }
    s.push('}');
    Ok(s)
}
