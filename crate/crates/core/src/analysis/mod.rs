//! Java-subset parsing and the program-analysis tools exposed to agents:
//! scope-aware variable extraction, placement classification and backward
//! slicing. Also recognizes logging statements.
//!
//! Line numbers are 1-based within the analysed text. A query line names an
//! insertion point: a statement inserted at line `L` pushes the current
//! content of `L` down, so it executes right before whatever starts on `L`.

pub mod ast;
pub mod defuse;
pub mod lexer;
pub mod logstmt;
pub mod parser;
mod position;
mod scope;
mod slice;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ast::{Field, Method, SourceTree};
pub use logstmt::{normalize_placeholders, parse_log_statement, Level, LoggingStatement};
pub use scope::{extract_variables, ScopeReport, ScopedVar};
pub use slice::{backward_slice, backward_slice_with, DataDep, MethodFacts, SliceMode, SliceReport};

use ast::{BlockKind, Stmt, StmtKind};
use position::locate;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("parse failure: {0}")]
    ParseFailure(String),
    #[error("line {line} is outside the method span {start}..={end}")]
    LineOutOfRange { line: usize, start: usize, end: usize },
}

/// Parsed single method, optionally with its enclosing class.
#[derive(Debug, Clone)]
pub struct MethodTree {
    pub tree: SourceTree,
    /// Fields of the enclosing (non-implicit) class.
    pub class_fields: Vec<Field>,
    pub method: Method,
}

impl MethodTree {
    pub fn body(&self) -> &ast::Block {
        self.method.body.as_ref().expect("MethodTree always has a body")
    }

    pub(crate) fn check_line(&self, line: usize) -> Result<(), AnalysisError> {
        if line < self.method.start_line || line > self.method.end_line {
            return Err(AnalysisError::LineOutOfRange { line, start: self.method.start_line, end: self.method.end_line });
        }
        Ok(())
    }
}

/// Parses a method (bare, or wrapped in a class) and selects the first method
/// that has a body.
pub fn parse_method(source: &str) -> Result<MethodTree, AnalysisError> {
    let tree = parser::parse_source(source)?;
    let (class_fields, method) = {
        let (ty, m) = tree.methods().into_iter().find(|(_, m)| m.body.is_some()).ok_or_else(|| AnalysisError::ParseFailure("no method with a body".into()))?;
        let fields = if ty.implicit { Vec::new() } else { ty.fields.clone() };
        (fields, m.clone())
    };
    Ok(MethodTree { tree, class_fields, method })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PlacementType {
    MethodEntry,
    MethodExit,
    CatchBlockEntry,
    LoopBody,
    BranchBody,
    General,
}

impl PlacementType {
    pub fn as_str(self) -> &'static str {
        match self {
            PlacementType::MethodEntry => "METHOD_ENTRY",
            PlacementType::MethodExit => "METHOD_EXIT",
            PlacementType::CatchBlockEntry => "CATCH_BLOCK_ENTRY",
            PlacementType::LoopBody => "LOOP_BODY",
            PlacementType::BranchBody => "BRANCH_BODY",
            PlacementType::General => "GENERAL",
        }
    }
}

/// Tie-break order: catch entry, method entry, method exit, loop body,
/// branch body, general.
pub fn classify_placement(method: &MethodTree, line: usize) -> Result<PlacementType, AnalysisError> {
    method.check_line(line)?;
    let pos = locate(method, line);
    let inner = pos.innermost();
    let at_start = pos.index == 0;
    if inner.kind == BlockKind::Catch && at_start {
        return Ok(PlacementType::CatchBlockEntry);
    }
    if inner.kind == BlockKind::MethodBody && at_start {
        return Ok(PlacementType::MethodEntry);
    }
    let before_return = matches!(inner.stmts.get(pos.index), Some(Stmt { kind: StmtKind::Return(_), .. }));
    let body_end = inner.kind == BlockKind::MethodBody && pos.index == inner.stmts.len();
    if before_return || body_end {
        return Ok(PlacementType::MethodExit);
    }
    for frame in pos.frames.iter().rev() {
        match frame.block.kind {
            BlockKind::Loop => return Ok(PlacementType::LoopBody),
            BlockKind::Then | BlockKind::Else | BlockKind::Case => return Ok(PlacementType::BranchBody),
            BlockKind::Catch | BlockKind::MethodBody => return Ok(PlacementType::General),
            _ => {}
        }
    }
    Ok(PlacementType::General)
}

/// Innermost brace-delimited block per line, by brace matching.
///
/// Index `i` holds the block id for line `i + 1`; lines outside every block
/// map to 0. Block ids are the token index of the opening brace plus one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockMap {
    pub blocks: Vec<usize>,
}

impl BlockMap {
    pub fn of_source(source: &str) -> Result<Self, AnalysisError> {
        let tokens = lexer::tokenize(source).map_err(|e| AnalysisError::ParseFailure(e.to_string()))?;
        let line_count = source.lines().count().max(1);
        let mut pairs = Vec::new();
        let mut stack = Vec::new();
        for (i, t) in tokens.iter().enumerate() {
            if t.kind != lexer::TokenKind::Punct {
                continue;
            }
            if t.text == "{" {
                stack.push((i, t.line));
            } else if t.text == "}" {
                let (oi, ol) = stack.pop().ok_or_else(|| AnalysisError::ParseFailure(format!("line {}: unbalanced `}}`", t.line)))?;
                pairs.push((oi + 1, ol, t.line));
            }
        }
        if !stack.is_empty() {
            return Err(AnalysisError::ParseFailure("unbalanced `{`".into()));
        }
        let blocks =
            (1..=line_count).map(|l| pairs.iter().filter(|(_, open, close)| *open < l && l <= *close).map(|(id, _, _)| *id).max().unwrap_or(0)).collect();
        Ok(BlockMap { blocks })
    }

    pub fn get(&self, line: usize) -> Option<usize> {
        line.checked_sub(1).and_then(|i| self.blocks.get(i).copied())
    }

    pub fn line_count(&self) -> usize {
        self.blocks.len()
    }
}

/// A logging statement found in a method body, with its byte span in the
/// analysed source.
#[derive(Debug, Clone)]
pub struct LocatedLog {
    pub statement: LoggingStatement,
    pub start_byte: usize,
    pub end_byte: usize,
    pub start_line: usize,
    pub end_line: usize,
    /// The statement is the whole body of an unbraced `if`/loop/label.
    pub sole_body: bool,
}

pub fn find_log_statements(tree: &SourceTree, method: &Method) -> Vec<LocatedLog> {
    fn walk(tree: &SourceTree, block: &ast::Block, out: &mut Vec<LocatedLog>) {
        let sole = !block.braced && matches!(block.kind, BlockKind::Then | BlockKind::Else | BlockKind::Loop | BlockKind::Labeled);
        for s in &block.stmts {
            if let StmtKind::Expr(_) = s.kind {
                if let Some(mut l) = parse_log_statement(&tree.source[s.start_byte..s.end_byte]) {
                    l.line = s.start_line;
                    out.push(LocatedLog {
                        statement: l,
                        start_byte: s.start_byte,
                        end_byte: s.end_byte,
                        start_line: s.start_line,
                        end_line: s.end_line,
                        sole_body: sole,
                    });
                }
            }
            for b in s.child_blocks() {
                walk(tree, b, out);
            }
        }
    }
    let mut out = Vec::new();
    if let Some(body) = &method.body {
        walk(tree, body, &mut out);
    }
    out
}
