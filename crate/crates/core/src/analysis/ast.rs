//! Syntax tree for the supported Java subset.
//!
//! Expressions are not modelled structurally: they are token ranges into
//! [`SourceTree::tokens`], which is enough for def/use extraction. Every body of
//! a control statement is a [`Block`]; braceless bodies become unbraced
//! single-statement blocks.

use std::ops::Range;

use super::lexer::{compact_text, Token};

pub type TokRange = Range<usize>;

#[derive(Debug, Clone)]
pub struct SourceTree {
    pub source: String,
    /// Non-comment tokens.
    pub tokens: Vec<Token>,
    pub types: Vec<TypeDecl>,
    pub warnings: Vec<String>,
    pub line_count: usize,
}

#[derive(Debug, Clone)]
pub struct TypeDecl {
    pub name: String,
    pub kind: String,
    /// True when the source had no enclosing type and members were parsed
    /// directly.
    pub implicit: bool,
    pub fields: Vec<Field>,
    pub methods: Vec<Method>,
    pub nested: Vec<TypeDecl>,
    pub start_line: usize,
    pub end_line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Field {
    pub name: String,
    pub ty: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub ty: String,
    pub line: usize,
}

#[derive(Debug, Clone)]
pub struct Method {
    pub name: String,
    pub modifiers: Vec<String>,
    pub annotations: Vec<String>,
    /// `None` for constructors.
    pub return_type: Option<String>,
    pub params: Vec<Param>,
    pub throws: Vec<String>,
    pub body: Option<Block>,
    pub start_line: usize,
    pub end_line: usize,
    pub start_byte: usize,
    pub end_byte: usize,
}

impl Method {
    pub fn is_constructor(&self) -> bool {
        self.return_type.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    MethodBody,
    Plain,
    Then,
    Else,
    Loop,
    Try,
    Catch,
    Finally,
    Synchronized,
    Case,
    Labeled,
}

#[derive(Debug, Clone)]
pub struct Block {
    pub id: usize,
    pub kind: BlockKind,
    /// Brace-delimited in source.
    pub braced: bool,
    /// Line of `{`, or the line just before the first statement of an
    /// unbraced body.
    pub open_line: usize,
    pub close_line: usize,
    pub stmts: Vec<Stmt>,
}

impl Block {
    /// Whether a statement inserted at `line` (pushing the current content of
    /// that line down) would land inside this block.
    pub fn contains_insertion(&self, line: usize) -> bool {
        self.open_line < line && line <= self.close_line
    }
}

#[derive(Debug, Clone)]
pub struct Stmt {
    pub kind: StmtKind,
    pub start_line: usize,
    pub end_line: usize,
    pub start_byte: usize,
    pub end_byte: usize,
    pub toks: TokRange,
}

#[derive(Debug, Clone)]
pub struct Declarator {
    pub name: String,
    pub ty: String,
    pub line: usize,
    pub init: Option<TokRange>,
    /// Tokens of the whole declarator (`name [= init]`).
    pub toks: TokRange,
}

#[derive(Debug, Clone)]
pub struct VarDecl {
    pub ty: String,
    pub declarators: Vec<Declarator>,
}

#[derive(Debug, Clone)]
pub enum ForInit {
    None,
    Decl(VarDecl, TokRange),
    Exprs(Vec<TokRange>),
}

#[derive(Debug, Clone)]
pub enum Resource {
    Decl(Declarator, TokRange),
    Expr(TokRange),
}

#[derive(Debug, Clone)]
pub struct CatchClause {
    pub param: Declarator,
    /// `catch (...)` header tokens.
    pub header: TokRange,
    pub body: Block,
}

#[derive(Debug, Clone)]
pub struct CaseGroup {
    /// Label expressions; empty for `default`.
    pub labels: Vec<TokRange>,
    pub is_default: bool,
    /// `case X ->` form (no fallthrough).
    pub arrow: bool,
    pub label_line: usize,
    pub body: Block,
}

#[derive(Debug, Clone)]
pub enum StmtKind {
    Block(Block),
    LocalVar(VarDecl),
    Expr(TokRange),
    If {
        cond: TokRange,
        then: Block,
        otherwise: Option<Block>,
    },
    For {
        init: ForInit,
        cond: Option<TokRange>,
        update: Vec<TokRange>,
        body: Block,
    },
    ForEach {
        var: Declarator,
        iterable: TokRange,
        header: TokRange,
        body: Block,
    },
    While {
        cond: TokRange,
        body: Block,
    },
    DoWhile {
        body: Block,
        cond: TokRange,
    },
    Try {
        resources: Vec<Resource>,
        body: Block,
        catches: Vec<CatchClause>,
        finally: Option<Block>,
    },
    Switch {
        selector: TokRange,
        open_line: usize,
        close_line: usize,
        groups: Vec<CaseGroup>,
    },
    Return(Option<TokRange>),
    Throw(TokRange),
    Yield(TokRange),
    Break(Option<String>),
    Continue(Option<String>),
    Synchronized {
        lock: TokRange,
        body: Block,
    },
    Labeled {
        label: String,
        body: Block,
    },
    Assert(TokRange),
    Empty,
    /// Local type declarations and anything the parser skipped.
    Opaque,
}

impl Stmt {
    /// Child blocks in source order.
    pub fn child_blocks(&self) -> Vec<&Block> {
        match &self.kind {
            StmtKind::Block(b) => vec![b],
            StmtKind::If { then, otherwise, .. } => {
                let mut v = vec![then];
                v.extend(otherwise.iter());
                v
            }
            StmtKind::For { body, .. }
            | StmtKind::ForEach { body, .. }
            | StmtKind::While { body, .. }
            | StmtKind::DoWhile { body, .. }
            | StmtKind::Synchronized { body, .. }
            | StmtKind::Labeled { body, .. } => vec![body],
            StmtKind::Try { body, catches, finally, .. } => {
                let mut v = vec![body];
                v.extend(catches.iter().map(|c| &c.body));
                v.extend(finally.iter());
                v
            }
            StmtKind::Switch { groups, .. } => groups.iter().map(|g| &g.body).collect(),
            _ => Vec::new(),
        }
    }
}

impl SourceTree {
    pub fn text(&self, r: &TokRange) -> String {
        compact_text(&self.tokens[r.clone()])
    }

    /// Source slice covered by a token range, whitespace runs collapsed.
    pub fn source_text(&self, r: &TokRange) -> String {
        if r.is_empty() {
            return String::new();
        }
        let s = self.tokens[r.start].start;
        let e = self.tokens[r.end - 1].end;
        collapse_ws(&self.source[s..e])
    }

    pub fn stmt_text(&self, s: &Stmt) -> String {
        collapse_ws(&self.source[s.start_byte..s.end_byte])
    }

    /// All methods of all (nested) type declarations in source order.
    pub fn methods(&self) -> Vec<(&TypeDecl, &Method)> {
        fn walk<'a>(t: &'a TypeDecl, out: &mut Vec<(&'a TypeDecl, &'a Method)>) {
            for m in &t.methods {
                out.push((t, m));
            }
            for n in &t.nested {
                walk(n, out);
            }
        }
        let mut out = Vec::new();
        for t in &self.types {
            walk(t, &mut out);
        }
        out.sort_by_key(|(_, m)| m.start_byte);
        out
    }
}

pub fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}
