//! Mapping a query line to a position in the statement tree.

use super::ast::{Block, Stmt};
use super::MethodTree;

pub(crate) struct Frame<'a> {
    pub block: &'a Block,
    /// Statement of the enclosing frame that owns this block (`None` for the
    /// method body).
    pub owner: Option<&'a Stmt>,
}

pub(crate) struct Position<'a> {
    /// Method body first, innermost block last.
    pub frames: Vec<Frame<'a>>,
    /// For every frame but the last: index of the statement descended into.
    pub path: Vec<usize>,
    /// Insertion index within the innermost block.
    pub index: usize,
    /// Statement occupying the query line, if any.
    pub current: Option<&'a Stmt>,
}

impl<'a> Position<'a> {
    pub fn innermost(&self) -> &'a Block {
        self.frames.last().unwrap().block
    }
}

/// Callers must have range-checked `line` against the method span.
pub(crate) fn locate(method: &MethodTree, line: usize) -> Position<'_> {
    let body = method.body();
    let mut pos = Position { frames: vec![Frame { block: body, owner: None }], path: Vec::new(), index: 0, current: None };
    if line <= body.open_line {
        pos.current = body.stmts.first().filter(|s| s.start_line == line);
        return pos;
    }
    let mut block = body;
    'descend: loop {
        for (idx, s) in block.stmts.iter().enumerate() {
            if s.end_line < line {
                continue;
            }
            if s.start_line >= line {
                pos.index = idx;
                pos.current = (s.start_line == line).then_some(s);
                return pos;
            }
            if let Some(child) = s.child_blocks().into_iter().find(|b| b.contains_insertion(line)) {
                pos.path.push(idx);
                pos.frames.push(Frame { block: child, owner: Some(s) });
                block = child;
                continue 'descend;
            }
            pos.index = idx;
            pos.current = Some(s);
            return pos;
        }
        pos.index = block.stmts.len();
        return pos;
    }
}
