//! Identifier roles inside expression token ranges.
//!
//! Heuristics: member names after `.` (other than `this.x`), method names, and
//! CamelCase / single-letter uppercase identifiers (type names) are ignored.
//! Assignment targets are defs; compound assignment and `++`/`--` targets are
//! both def and use. Field writes (`a.b = v`) define the field name.

use std::collections::BTreeMap;

use super::lexer::{Token, TokenKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Use,
    Def,
    DefUse,
}

impl Role {
    pub fn is_def(self) -> bool {
        matches!(self, Role::Def | Role::DefUse)
    }
    pub fn is_use(self) -> bool {
        matches!(self, Role::Use | Role::DefUse)
    }
    fn merge(self, other: Role) -> Role {
        if self == other {
            self
        } else {
            Role::DefUse
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentRef {
    /// Absolute token index.
    pub idx: usize,
    pub name: String,
    pub role: Role,
}

const ASSIGN_OPS: &[&str] = &["=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<="];

pub fn looks_like_type_name(name: &str) -> bool {
    let mut chars = name.chars();
    let Some(first) = chars.next() else { return false };
    if !first.is_uppercase() {
        return false;
    }
    name.len() == 1 || name.chars().any(|c| c.is_lowercase())
}

fn adjacent(a: &Token, b: &Token) -> bool {
    a.end == b.start
}

/// Classifies variable references in `tokens[range]`.
pub fn classify(tokens: &[Token], range: std::ops::Range<usize>) -> Vec<IdentRef> {
    let (a, b) = (range.start, range.end.min(tokens.len()));
    if a >= b {
        return Vec::new();
    }
    let tok = |i: usize| -> Option<&Token> {
        if i >= a && i < b {
            tokens.get(i)
        } else {
            None
        }
    };
    let is = |i: usize, s: &str| tok(i).is_some_and(|t| t.kind == TokenKind::Punct && t.text == s);

    let mut lambda_params = vec![false; b - a];
    for j in a..b {
        if !is(j, "->") || j == a {
            continue;
        }
        if tok(j - 1).is_some_and(|t| t.is_ident()) {
            lambda_params[j - 1 - a] = true;
        } else if is(j - 1, ")") {
            let mut depth = 0usize;
            let mut k = j - 1;
            loop {
                if is(k, ")") {
                    depth += 1;
                } else if is(k, "(") {
                    depth -= 1;
                    if depth == 0 {
                        break;
                    }
                }
                if k == a {
                    break;
                }
                k -= 1;
            }
            for m in k..j {
                lambda_params[m - a] = true;
            }
        }
    }

    let mut roles: BTreeMap<usize, (String, Role)> = BTreeMap::new();
    fn put(roles: &mut BTreeMap<usize, (String, Role)>, idx: usize, name: &str, role: Role) {
        roles.entry(idx).and_modify(|e| e.1 = e.1.merge(role)).or_insert_with(|| (name.to_string(), role));
    }

    // assignment targets
    for j in a..b {
        let t = &tokens[j];
        if t.kind != TokenKind::Punct {
            continue;
        }
        let compound_shift = t.text == ">=" && j > a && is(j - 1, ">") && adjacent(&tokens[j - 1], t);
        let is_assign = ASSIGN_OPS.contains(&t.text.as_str()) || compound_shift;
        if is_assign && j > a {
            let mut k = j - 1;
            if compound_shift {
                while k > a && is(k, ">") {
                    k -= 1;
                }
            }
            let mut array_write = false;
            if is(k, "]") {
                let mut depth = 0usize;
                loop {
                    if is(k, "]") {
                        depth += 1;
                    } else if is(k, "[") {
                        depth -= 1;
                        if depth == 0 {
                            break;
                        }
                    }
                    if k == a {
                        break;
                    }
                    k -= 1;
                }
                if k == a {
                    continue;
                }
                k -= 1;
                array_write = true;
            }
            if let Some(target) = tok(k).filter(|t| t.is_ident()) {
                let role = if t.text == "=" && !array_write { Role::Def } else { Role::DefUse };
                put(&mut roles, k, &target.text, role);
            }
        } else if t.text == "++" || t.text == "--" {
            if j > a && tok(j - 1).is_some_and(|p| p.is_ident()) {
                put(&mut roles, j - 1, &tokens[j - 1].text, Role::DefUse);
            } else {
                // prefix: last identifier of a `this.a.b` chain
                let mut k = j + 1;
                let mut target = None;
                while let Some(n) = tok(k) {
                    if n.is_ident() || n.is("this") {
                        if n.is_ident() {
                            target = Some(k);
                        }
                        k += 1;
                        if is(k, ".") {
                            k += 1;
                            continue;
                        }
                    }
                    break;
                }
                if let Some(k) = target {
                    put(&mut roles, k, &tokens[k].text, Role::DefUse);
                }
            }
        }
    }

    for i in a..b {
        let t = &tokens[i];
        if !t.is_ident() || lambda_params[i - a] || roles.contains_key(&i) {
            continue;
        }
        let after_dot = i > a && is(i - 1, ".");
        let this_member = after_dot && i >= a + 2 && tok(i - 2).is_some_and(|p| p.is("this"));
        if after_dot && !this_member {
            continue;
        }
        if is(i + 1, "(") || (i > a && tok(i - 1).is_some_and(|p| p.is("new"))) {
            continue;
        }
        if looks_like_type_name(&t.text) {
            continue;
        }
        put(&mut roles, i, &t.text, Role::Use);
    }

    roles.into_iter().map(|(idx, (name, role))| IdentRef { idx, name, role }).collect()
}
