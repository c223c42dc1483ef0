use serde::{Deserialize, Serialize};

use super::ast::{ForInit, Resource, Stmt, StmtKind};
use super::position::locate;
use super::{AnalysisError, MethodTree};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScopedVar {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: String,
    /// Declaration line; absent for fields and parameters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
}

/// Variables visible at an insertion line.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ScopeReport {
    pub fields: Vec<ScopedVar>,
    pub params: Vec<ScopedVar>,
    pub locals: Vec<ScopedVar>,
}

impl ScopeReport {
    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.fields.iter().chain(&self.params).chain(&self.locals).map(|v| v.name.as_str())
    }
}

fn local(name: &str, ty: &str, line: usize) -> ScopedVar {
    ScopedVar { name: name.to_string(), ty: ty.to_string(), line: Some(line) }
}

fn declared_by(s: &Stmt, out: &mut Vec<ScopedVar>) {
    if let StmtKind::LocalVar(d) = &s.kind {
        out.extend(d.declarators.iter().map(|v| local(&v.name, &v.ty, v.line)));
    }
}

/// Variables a construct introduces for the child block with id `child`.
fn introduced_for(owner: &Stmt, child: usize, out: &mut Vec<ScopedVar>) {
    match &owner.kind {
        StmtKind::For { init: ForInit::Decl(d, _), body, .. } if body.id == child => {
            out.extend(d.declarators.iter().map(|v| local(&v.name, &v.ty, v.line)));
        }
        StmtKind::ForEach { var, body, .. } if body.id == child => out.push(local(&var.name, &var.ty, var.line)),
        StmtKind::Try { resources, body, catches, .. } => {
            if body.id == child {
                for r in resources {
                    if let Resource::Decl(d, _) = r {
                        out.push(local(&d.name, &d.ty, d.line));
                    }
                }
            }
            for c in catches.iter().filter(|c| c.body.id == child) {
                out.push(local(&c.param.name, &c.param.ty, c.param.line));
            }
        }
        _ => {}
    }
}

/// Class fields, parameters, and locals declared before `line` in a block
/// enclosing it.
pub fn extract_variables(method: &MethodTree, line: usize) -> Result<ScopeReport, AnalysisError> {
    method.check_line(line)?;
    let pos = locate(method, line);
    let mut locals = Vec::new();
    for (depth, frame) in pos.frames.iter().enumerate() {
        if let Some(owner) = frame.owner {
            introduced_for(owner, frame.block.id, &mut locals);
        }
        let upto = if depth + 1 < pos.frames.len() { pos.path[depth] } else { pos.index };
        for s in &frame.block.stmts[..upto] {
            declared_by(s, &mut locals);
        }
    }
    locals.retain(|v| v.line.is_some_and(|l| l < line));
    let fields = method.class_fields.iter().map(|f| ScopedVar { name: f.name.clone(), ty: f.ty.clone(), line: None }).collect();
    let params = method.method.params.iter().map(|p| ScopedVar { name: p.name.clone(), ty: p.ty.clone(), line: None }).collect();
    Ok(ScopeReport { fields, params, locals })
}
