//! Backward slicing over a statement-level control-flow graph with
//! reaching definitions.
//!
//! A probe node is spliced into the graph at the query position; the
//! definitions reaching it seed a transitive use-def walk restricted to lines
//! before the query line.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::ast::{Block, ForInit, Resource, SourceTree, Stmt, StmtKind, TokRange};
use super::defuse::{classify, Role};
use super::position::{locate, Position};
use super::scope::extract_variables;
use super::{classify_placement, AnalysisError, MethodTree, PlacementType};

/// How seed variables are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SliceMode {
    /// Identifiers used on the query line when a statement occupies it,
    /// otherwise the insertion rule.
    #[default]
    Auto,
    /// In-scope identifiers referenced earlier in the innermost block.
    Insertion,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodFacts {
    pub name: String,
    /// `None` for constructors.
    pub return_type: Option<String>,
    pub modifiers: Vec<String>,
    pub throws: Vec<String>,
    pub parameters: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DataDep {
    pub line: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceReport {
    pub placement: PlacementType,
    pub method_facts: MethodFacts,
    pub data_deps: Vec<DataDep>,
    /// Innermost last.
    pub control_context: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NodeKind {
    Entry,
    Join,
    Probe,
    Stmt,
}

#[derive(Debug)]
struct Node {
    kind: NodeKind,
    line: usize,
    text: String,
    /// Names defined here.
    gen: Vec<String>,
    /// Names whose earlier definitions are killed here.
    kill: Vec<String>,
    uses: Vec<String>,
    succ: Vec<usize>,
}

struct JumpCtx {
    label: Option<String>,
    /// Loop contexts accept `continue`.
    is_loop: bool,
    breaks: Vec<usize>,
    continues: Vec<usize>,
}

struct Cfg<'t> {
    tree: &'t SourceTree,
    nodes: Vec<Node>,
    jumps: Vec<JumpCtx>,
    probe_at: (usize, usize),
    probe: Option<usize>,
    pending_label: Option<String>,
}

#[derive(Default)]
struct Refs {
    gen: Vec<String>,
    kill: Vec<String>,
    uses: Vec<String>,
}

impl Refs {
    fn of(tree: &SourceTree, r: &TokRange) -> Refs {
        let mut out = Refs::default();
        out.add(tree, r);
        out
    }

    fn add(&mut self, tree: &SourceTree, r: &TokRange) {
        for id in classify(&tree.tokens, r.clone()) {
            if id.role.is_use() {
                self.uses.push(id.name.clone());
            }
            if id.role.is_def() {
                self.gen.push(id.name.clone());
            }
            if id.role == Role::Def {
                self.kill.push(id.name);
            }
        }
    }

    fn declare(&mut self, name: &str) {
        self.gen.push(name.to_string());
        self.kill.push(name.to_string());
    }
}

impl<'t> Cfg<'t> {
    fn node(&mut self, kind: NodeKind, line: usize, text: String, refs: Refs, preds: &[usize]) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node { kind, line, text, gen: refs.gen, kill: refs.kill, uses: refs.uses, succ: Vec::new() });
        for &p in preds {
            self.nodes[p].succ.push(id);
        }
        id
    }

    fn join(&mut self, preds: &[usize]) -> usize {
        self.node(NodeKind::Join, 0, String::new(), Refs::default(), preds)
    }

    fn edge(&mut self, from: usize, to: usize) {
        if !self.nodes[from].succ.contains(&to) {
            self.nodes[from].succ.push(to);
        }
    }

    fn block(&mut self, b: &Block, mut preds: Vec<usize>) -> Vec<usize> {
        for (i, s) in b.stmts.iter().enumerate() {
            if self.probe_at == (b.id, i) {
                let p = self.node(NodeKind::Probe, 0, String::new(), Refs::default(), &preds);
                self.probe = Some(p);
                preds = vec![p];
            }
            preds = self.stmt(s, preds);
        }
        if self.probe_at == (b.id, b.stmts.len()) {
            let p = self.node(NodeKind::Probe, 0, String::new(), Refs::default(), &preds);
            self.probe = Some(p);
            preds = vec![p];
        }
        preds
    }

    fn simple(&mut self, s: &Stmt, refs: Refs, preds: &[usize]) -> usize {
        let text = self.tree.stmt_text(s);
        self.node(NodeKind::Stmt, s.start_line, text, refs, preds)
    }

    fn expr_node(&mut self, r: &TokRange, preds: &[usize]) -> usize {
        let line = self.tree.tokens.get(r.start).map_or(0, |t| t.line);
        let refs = Refs::of(self.tree, r);
        let text = self.tree.source_text(r);
        self.node(NodeKind::Stmt, line, text, refs, preds)
    }

    fn take_label(&mut self) -> Option<String> {
        self.pending_label.take()
    }

    fn find_jump(&mut self, label: &Option<String>, want_loop: bool) -> Option<&mut JumpCtx> {
        self.jumps.iter_mut().rev().find(|c| match label {
            Some(l) => c.label.as_deref() == Some(l.as_str()),
            None => !want_loop || c.is_loop,
        })
    }

    fn loop_ctx(&mut self, label: Option<String>) {
        self.jumps.push(JumpCtx { label, is_loop: true, breaks: Vec::new(), continues: Vec::new() });
    }

    fn stmt(&mut self, s: &Stmt, preds: Vec<usize>) -> Vec<usize> {
        let tree = self.tree;
        match &s.kind {
            StmtKind::Block(b) => self.block(b, preds),
            StmtKind::LocalVar(d) => {
                let mut refs = Refs::default();
                for v in &d.declarators {
                    if let Some(init) = &v.init {
                        refs.add(tree, init);
                    }
                    refs.declare(&v.name);
                }
                vec![self.simple(s, refs, &preds)]
            }
            StmtKind::Expr(r) | StmtKind::Assert(r) | StmtKind::Yield(r) => {
                let refs = Refs::of(tree, r);
                vec![self.simple(s, refs, &preds)]
            }
            StmtKind::Return(r) => {
                let refs = r.as_ref().map(|r| Refs::of(tree, r)).unwrap_or_default();
                self.simple(s, refs, &preds);
                Vec::new()
            }
            StmtKind::Throw(r) => {
                let refs = Refs::of(tree, r);
                self.simple(s, refs, &preds);
                Vec::new()
            }
            StmtKind::Break(label) => {
                let n = self.simple(s, Refs::default(), &preds);
                if let Some(c) = self.find_jump(label, false) {
                    c.breaks.push(n);
                }
                Vec::new()
            }
            StmtKind::Continue(label) => {
                let n = self.simple(s, Refs::default(), &preds);
                if let Some(c) = self.find_jump(label, true) {
                    c.continues.push(n);
                }
                Vec::new()
            }
            StmtKind::If { cond, then, otherwise } => {
                let c = self.expr_node(cond, &preds);
                let mut out = self.block(then, vec![c]);
                match otherwise {
                    Some(e) => out.extend(self.block(e, vec![c])),
                    None => out.push(c),
                }
                out
            }
            StmtKind::While { cond, body } => {
                let label = self.take_label();
                let c = self.expr_node(cond, &preds);
                self.loop_ctx(label);
                let body_out = self.block(body, vec![c]);
                let ctx = self.jumps.pop().unwrap();
                for p in body_out.into_iter().chain(ctx.continues) {
                    self.edge(p, c);
                }
                let mut out = vec![c];
                out.extend(ctx.breaks);
                out
            }
            StmtKind::DoWhile { body, cond } => {
                let label = self.take_label();
                let head = self.join(&preds);
                self.loop_ctx(label);
                let body_out = self.block(body, vec![head]);
                let ctx = self.jumps.pop().unwrap();
                let mut into_cond = body_out;
                into_cond.extend(ctx.continues);
                let c = self.expr_node(cond, &into_cond);
                self.edge(c, head);
                let mut out = vec![c];
                out.extend(ctx.breaks);
                out
            }
            StmtKind::For { init, cond, update, body } => {
                let label = self.take_label();
                let mut cur = preds;
                match init {
                    ForInit::None => {}
                    ForInit::Decl(d, r) => {
                        let mut refs = Refs::default();
                        for v in &d.declarators {
                            if let Some(i) = &v.init {
                                refs.add(tree, i);
                            }
                            refs.declare(&v.name);
                        }
                        let line = tree.tokens.get(r.start).map_or(s.start_line, |t| t.line);
                        let text = tree.source_text(r);
                        cur = vec![self.node(NodeKind::Stmt, line, text, refs, &cur)];
                    }
                    ForInit::Exprs(es) => {
                        for e in es {
                            cur = vec![self.expr_node(e, &cur)];
                        }
                    }
                }
                let head = match cond {
                    Some(c) => self.expr_node(c, &cur),
                    None => self.join(&cur),
                };
                self.loop_ctx(label);
                let body_out = self.block(body, vec![head]);
                let ctx = self.jumps.pop().unwrap();
                let mut tail: Vec<usize> = body_out.into_iter().chain(ctx.continues).collect();
                for u in update {
                    tail = vec![self.expr_node(u, &tail)];
                }
                for p in tail {
                    self.edge(p, head);
                }
                let mut out = if cond.is_some() { vec![head] } else { Vec::new() };
                out.extend(ctx.breaks);
                out
            }
            StmtKind::ForEach { var, iterable, body, .. } => {
                let label = self.take_label();
                let head = self.join(&preds);
                let mut refs = Refs::of(tree, iterable);
                refs.declare(&var.name);
                let text = format!("{} {} : {}", var.ty, var.name, tree.source_text(iterable));
                let v = self.node(NodeKind::Stmt, var.line, text, refs, &[head]);
                self.loop_ctx(label);
                let body_out = self.block(body, vec![v]);
                let ctx = self.jumps.pop().unwrap();
                for p in body_out.into_iter().chain(ctx.continues) {
                    self.edge(p, head);
                }
                let mut out = vec![head];
                out.extend(ctx.breaks);
                out
            }
            StmtKind::Try { resources, body, catches, finally } => {
                let mut cur = preds.clone();
                for r in resources {
                    cur = vec![match r {
                        Resource::Decl(d, range) => {
                            let mut refs = Refs::default();
                            if let Some(i) = &d.init {
                                refs.add(tree, i);
                            }
                            refs.declare(&d.name);
                            let text = tree.source_text(range);
                            self.node(NodeKind::Stmt, d.line, text, refs, &cur)
                        }
                        Resource::Expr(range) => self.expr_node(range, &cur),
                    }];
                }
                let first = self.nodes.len();
                let mut out = self.block(body, cur.clone());
                let last = self.nodes.len();
                let mut throwers: Vec<usize> = cur;
                throwers.extend(first..last);
                for c in catches {
                    let mut refs = Refs::default();
                    refs.declare(&c.param.name);
                    let text = tree.source_text(&c.header);
                    let p = self.node(NodeKind::Stmt, c.param.line, text, refs, &throwers);
                    out.extend(self.block(&c.body, vec![p]));
                }
                match finally {
                    Some(f) => self.block(f, out),
                    None => out,
                }
            }
            StmtKind::Switch { selector, groups, .. } => {
                let label = self.take_label();
                let sel = self.expr_node(selector, &preds);
                self.jumps.push(JumpCtx { label, is_loop: false, breaks: Vec::new(), continues: Vec::new() });
                let mut fall: Vec<usize> = Vec::new();
                let mut out = Vec::new();
                for g in groups {
                    let mut entry = vec![sel];
                    entry.append(&mut fall);
                    let end = self.block(&g.body, entry);
                    if g.arrow {
                        out.extend(end);
                    } else {
                        fall = end;
                    }
                }
                out.extend(fall);
                if !groups.iter().any(|g| g.is_default) {
                    out.push(sel);
                }
                let ctx = self.jumps.pop().unwrap();
                out.extend(ctx.breaks);
                out
            }
            StmtKind::Synchronized { lock, body } => {
                let l = self.expr_node(lock, &preds);
                self.block(body, vec![l])
            }
            StmtKind::Labeled { label, body } => {
                let loops = body.stmts.len() == 1
                    && matches!(
                        body.stmts[0].kind,
                        StmtKind::For { .. } | StmtKind::ForEach { .. } | StmtKind::While { .. } | StmtKind::DoWhile { .. } | StmtKind::Switch { .. }
                    );
                if loops {
                    self.pending_label = Some(label.clone());
                    return self.block(body, preds);
                }
                self.jumps.push(JumpCtx { label: Some(label.clone()), is_loop: false, breaks: Vec::new(), continues: Vec::new() });
                let mut out = self.block(body, preds);
                let ctx = self.jumps.pop().unwrap();
                out.extend(ctx.breaks);
                out
            }
            StmtKind::Empty | StmtKind::Opaque => preds,
        }
    }
}

type Def = (usize, String);

fn reaching_definitions(nodes: &[Node]) -> Vec<BTreeSet<Def>> {
    let mut preds = vec![Vec::new(); nodes.len()];
    for (i, n) in nodes.iter().enumerate() {
        for &s in &n.succ {
            preds[s].push(i);
        }
    }
    let mut inn: Vec<BTreeSet<Def>> = vec![BTreeSet::new(); nodes.len()];
    let mut out: Vec<BTreeSet<Def>> = vec![BTreeSet::new(); nodes.len()];
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..nodes.len() {
            let new_in: BTreeSet<Def> = preds[i].iter().flat_map(|&p| out[p].iter().cloned()).collect();
            let n = &nodes[i];
            let mut new_out: BTreeSet<Def> = new_in.iter().filter(|(_, v)| !n.kill.contains(v)).cloned().collect();
            new_out.extend(n.gen.iter().map(|v| (i, v.clone())));
            if new_out != out[i] {
                out[i] = new_out;
                changed = true;
            }
            inn[i] = new_in;
        }
    }
    inn
}

fn control_context(tree: &SourceTree, pos: &Position<'_>) -> Vec<String> {
    let mut out = Vec::new();
    for frame in &pos.frames {
        let Some(owner) = frame.owner else { continue };
        let id = frame.block.id;
        match &owner.kind {
            StmtKind::If { cond, then, .. } => {
                let c = tree.source_text(cond);
                out.push(if then.id == id { c } else { format!("!({c})") });
            }
            StmtKind::While { cond, .. } | StmtKind::DoWhile { cond, .. } => out.push(tree.source_text(cond)),
            StmtKind::For { cond, .. } => out.push(cond.as_ref().map_or_else(|| "true".to_string(), |c| tree.source_text(c))),
            StmtKind::ForEach { var, iterable, .. } => out.push(format!("{} {} : {}", var.ty, var.name, tree.source_text(iterable))),
            StmtKind::Switch { selector, groups, .. } => {
                let sel = tree.source_text(selector);
                if let Some(gi) = groups.iter().position(|g| g.body.id == id) {
                    // empty labels directly above fall through into this group
                    let mut first = gi;
                    while first > 0 && !groups[first - 1].arrow && groups[first - 1].body.stmts.is_empty() {
                        first -= 1;
                    }
                    let mut alts = Vec::new();
                    let mut default = false;
                    for g in &groups[first..=gi] {
                        alts.extend(g.labels.iter().map(|l| format!("{sel} == {}", tree.source_text(l))));
                        default |= g.is_default;
                    }
                    if default {
                        alts.push(format!("switch ({sel}) default"));
                    }
                    out.push(alts.join(" || "));
                }
            }
            _ => {}
        }
    }
    out
}

fn method_facts(m: &MethodTree) -> MethodFacts {
    let method = &m.method;
    MethodFacts {
        name: method.name.clone(),
        return_type: method.return_type.clone(),
        modifiers: method.modifiers.clone(),
        throws: method.throws.clone(),
        parameters: method.params.iter().map(|p| format!("{} {}", p.ty, p.name)).collect(),
    }
}

fn refs_on_line(tree: &SourceTree, s: &Stmt, line: usize) -> Vec<String> {
    classify(&tree.tokens, s.toks.clone()).into_iter().filter(|r| r.role.is_use() && tree.tokens[r.idx].line == line).map(|r| r.name).collect()
}

pub fn backward_slice(method: &MethodTree, line: usize) -> Result<SliceReport, AnalysisError> {
    backward_slice_with(method, line, SliceMode::Auto)
}

pub fn backward_slice_with(method: &MethodTree, line: usize, mode: SliceMode) -> Result<SliceReport, AnalysisError> {
    let placement = classify_placement(method, line)?;
    let tree = &method.tree;
    let pos = locate(method, line);

    let mut seeds: BTreeSet<String> = BTreeSet::new();
    if mode == SliceMode::Auto {
        if let Some(cur) = pos.current {
            seeds.extend(refs_on_line(tree, cur, line));
        }
    }
    if seeds.is_empty() {
        let scope = extract_variables(method, line)?;
        let visible: BTreeSet<&str> = scope.names().collect();
        for s in &pos.innermost().stmts[..pos.index] {
            for r in classify(&tree.tokens, s.toks.clone()) {
                if visible.contains(r.name.as_str()) {
                    seeds.insert(r.name);
                }
            }
        }
    }

    let mut cfg = Cfg { tree, nodes: Vec::new(), jumps: Vec::new(), probe_at: (pos.innermost().id, pos.index), probe: None, pending_label: None };
    let mut entry_refs = Refs::default();
    for f in &method.class_fields {
        entry_refs.declare(&f.name);
    }
    for p in &method.method.params {
        entry_refs.declare(&p.name);
    }
    let entry = cfg.node(NodeKind::Entry, method.method.start_line, String::new(), entry_refs, &[]);
    cfg.block(method.body(), vec![entry]);
    let probe = cfg.probe.expect("probe position lies inside the method body");
    let nodes = cfg.nodes;
    let reach = reaching_definitions(&nodes);

    let mut picked: BTreeSet<usize> = BTreeSet::new();
    let mut work: Vec<(usize, String)> = seeds.into_iter().map(|v| (probe, v)).collect();
    let mut seen: BTreeSet<(usize, String)> = BTreeSet::new();
    while let Some((at, var)) = work.pop() {
        if !seen.insert((at, var.clone())) {
            continue;
        }
        for (d, _) in reach[at].iter().filter(|(_, v)| *v == var) {
            let n = &nodes[*d];
            if n.kind != NodeKind::Stmt || n.line >= line || !picked.insert(*d) {
                continue;
            }
            work.extend(n.uses.iter().map(|u| (*d, u.clone())));
        }
    }
    let mut data_deps: Vec<DataDep> = picked.into_iter().map(|i| DataDep { line: nodes[i].line, text: nodes[i].text.clone() }).collect();
    data_deps.sort();
    data_deps.dedup();

    Ok(SliceReport { placement, method_facts: method_facts(method), data_deps, control_context: control_context(tree, &pos) })
}
