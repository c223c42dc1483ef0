//! Recursive-descent parser for Java compilation units and bare methods.

use super::ast::*;
use super::lexer::{is_keyword, tokenize, Token, TokenKind, PRIMITIVES};
use super::AnalysisError;

const MODIFIERS: &[&str] = &[
    "public",
    "protected",
    "private",
    "static",
    "final",
    "abstract",
    "native",
    "synchronized",
    "transient",
    "volatile",
    "strictfp",
    "default",
    "sealed",
    "non-sealed",
];

type PResult<T> = Result<T, AnalysisError>;

pub fn parse_source(source: &str) -> PResult<SourceTree> {
    let all = tokenize(source).map_err(|e| AnalysisError::ParseFailure(e.to_string()))?;
    let tokens: Vec<Token> = all.into_iter().filter(|t| !t.is_comment()).collect();
    if tokens.is_empty() {
        return Err(AnalysisError::ParseFailure("empty input".into()));
    }
    let mut p = Parser { toks: &tokens, pos: 0, next_block: 1, warnings: Vec::new() };
    let types = p.compilation_unit()?;
    let line_count = source.lines().count().max(1);
    let warnings = std::mem::take(&mut p.warnings);
    Ok(SourceTree { source: source.to_string(), tokens, types, warnings, line_count })
}

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
    next_block: usize,
    warnings: Vec<String>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, n: usize) -> Option<&'a Token> {
        self.toks.get(self.pos + n)
    }

    fn at(&self, s: &str) -> bool {
        self.peek().is_some_and(|t| t.is(s) && t.kind != TokenKind::Str)
    }

    fn at_n(&self, n: usize, s: &str) -> bool {
        self.peek_at(n).is_some_and(|t| t.is(s))
    }

    fn bump(&mut self) -> PResult<&'a Token> {
        let t = self.toks.get(self.pos).ok_or_else(|| self.err("unexpected end of input"))?;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, s: &str) -> PResult<&'a Token> {
        if self.at(s) {
            self.bump()
        } else {
            Err(self.err(&format!("expected `{s}`")))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek() {
            Some(t) if t.is_ident() => {
                self.pos += 1;
                Ok(t.text.clone())
            }
            _ => Err(self.err("expected identifier")),
        }
    }

    fn err(&self, msg: &str) -> AnalysisError {
        match self.peek() {
            Some(t) => AnalysisError::ParseFailure(format!("line {}: {msg}, found `{}`", t.line, t.text)),
            None => AnalysisError::ParseFailure(format!("{msg} at end of input")),
        }
    }

    fn line(&self) -> usize {
        self.peek().map(|t| t.line).or_else(|| self.toks.last().map(|t| t.end_line)).unwrap_or(1)
    }

    fn prev_line(&self) -> usize {
        self.toks[self.pos.saturating_sub(1)].end_line
    }

    fn fresh_block_id(&mut self) -> usize {
        let id = self.next_block;
        self.next_block += 1;
        id
    }

    // ---------------------------------------------------------------- types

    fn compilation_unit(&mut self) -> PResult<Vec<TypeDecl>> {
        if self.at("package") {
            self.skip_past(";")?;
        }
        while self.at("import") {
            self.skip_past(";")?;
        }
        let save = self.pos;
        self.skip_modifiers()?;
        let is_type = self.at_type_keyword();
        self.pos = save;
        if !is_type {
            let start_line = self.line();
            let (fields, methods, nested) = self.members("", true)?;
            return Ok(vec![TypeDecl {
                name: String::new(),
                kind: "implicit".into(),
                implicit: true,
                fields,
                methods,
                nested,
                start_line,
                end_line: self.prev_line(),
            }]);
        }
        let mut types = Vec::new();
        while self.peek().is_some() {
            if self.at(";") {
                self.pos += 1;
                continue;
            }
            let start_line = self.line();
            self.skip_modifiers()?;
            if !self.at_type_keyword() {
                return Err(self.err("expected type declaration"));
            }
            types.push(self.type_decl(start_line)?);
        }
        Ok(types)
    }

    fn at_type_keyword(&self) -> bool {
        match self.peek() {
            Some(t) if t.is("class") || t.is("interface") || t.is("enum") => true,
            Some(t) if t.is("@") => self.at_n(1, "interface"),
            Some(t) if t.is("record") => self.peek_at(1).is_some_and(|n| n.is_ident()) && self.at_n(2, "("),
            _ => false,
        }
    }

    fn type_decl(&mut self, start_line: usize) -> PResult<TypeDecl> {
        let kind = if self.at("@") {
            self.pos += 2;
            "annotation".to_string()
        } else {
            self.bump()?.text.clone()
        };
        let name = self.ident()?;
        // header: type params, record components, extends/implements/permits
        while !self.at("{") {
            if self.peek().is_none() {
                return Err(self.err("expected `{`"));
            }
            if self.at("(") || self.at("<") {
                self.skip_balanced()?;
            } else {
                self.pos += 1;
            }
        }
        self.expect("{")?;
        if kind == "enum" {
            self.skip_enum_constants()?;
        }
        let (fields, methods, nested) = self.members(&name, false)?;
        let end = self.expect("}")?;
        Ok(TypeDecl { name, kind, implicit: false, fields, methods, nested, start_line, end_line: end.line })
    }

    fn skip_enum_constants(&mut self) -> PResult<()> {
        loop {
            match self.peek() {
                None => return Err(self.err("unterminated enum")),
                Some(t) if t.is(";") => {
                    self.pos += 1;
                    return Ok(());
                }
                Some(t) if t.is("}") => return Ok(()),
                Some(t) if t.is("(") || t.is("{") => self.skip_balanced()?,
                _ => self.pos += 1,
            }
        }
    }

    fn members(&mut self, class_name: &str, top: bool) -> PResult<(Vec<Field>, Vec<Method>, Vec<TypeDecl>)> {
        let mut fields = Vec::new();
        let mut methods = Vec::new();
        let mut nested = Vec::new();
        loop {
            match self.peek() {
                None if top => break,
                None => return Err(self.err("unterminated type body")),
                Some(t) if t.is("}") => {
                    if top {
                        return Err(self.err("unbalanced `}`"));
                    }
                    break;
                }
                Some(t) if t.is(";") => {
                    self.pos += 1;
                    continue;
                }
                Some(t) if t.is("{") => {
                    self.skip_balanced()?;
                    continue;
                }
                Some(t) if t.is("static") && self.at_n(1, "{") => {
                    self.pos += 1;
                    self.skip_balanced()?;
                    continue;
                }
                _ => {}
            }
            let start = self.pos;
            let start_line = self.line();
            let (modifiers, annotations) = self.skip_modifiers()?;
            if self.at_type_keyword() {
                nested.push(self.type_decl(start_line)?);
                continue;
            }
            if self.at("<") {
                self.skip_balanced()?;
            }
            let ctor = self.peek().is_some_and(|t| t.is_ident()) && self.at_n(1, "(");
            let ctor_compact = !class_name.is_empty() && self.peek().is_some_and(|t| t.text == class_name) && self.at_n(1, "{");
            let return_type = if ctor || ctor_compact { None } else { Some(self.parse_type().ok_or_else(|| self.err("expected member declaration"))?) };
            let name_line = self.line();
            let name = self.ident()?;
            if self.at("(") || ctor_compact {
                let m = self.method_rest(start, name, modifiers, annotations, return_type)?;
                methods.push(m);
            } else {
                let ty = return_type.unwrap_or_default();
                fields.push(Field { name, ty: ty.clone(), line: name_line });
                self.skip_dims();
                loop {
                    if self.at("=") {
                        self.pos += 1;
                        self.skip_expr(&[",", ";"])?;
                    }
                    if self.at(",") {
                        self.pos += 1;
                        let line = self.line();
                        let n = self.ident()?;
                        let dims = self.skip_dims();
                        fields.push(Field { name: n, ty: format!("{ty}{}", "[]".repeat(dims)), line });
                        continue;
                    }
                    self.expect(";")?;
                    break;
                }
            }
        }
        Ok((fields, methods, nested))
    }

    fn method_rest(&mut self, start: usize, name: String, modifiers: Vec<String>, annotations: Vec<String>, return_type: Option<String>) -> PResult<Method> {
        let mut params = Vec::new();
        if self.at("(") {
            self.pos += 1;
            while !self.at(")") {
                self.skip_modifiers()?;
                let mut ty = self.parse_type().ok_or_else(|| self.err("expected parameter type"))?;
                if self.at("...") {
                    self.pos += 1;
                    ty.push_str("...");
                }
                let line = self.line();
                let pname = match self.peek() {
                    Some(t) if t.is_ident() || t.is("this") => {
                        self.pos += 1;
                        t.text.clone()
                    }
                    _ => return Err(self.err("expected parameter name")),
                };
                let dims = self.skip_dims();
                ty.push_str(&"[]".repeat(dims));
                if pname != "this" {
                    params.push(Param { name: pname, ty, line });
                }
                if self.at(",") {
                    self.pos += 1;
                } else if !self.at(")") {
                    return Err(self.err("expected `,` or `)` in parameter list"));
                }
            }
            self.pos += 1;
        }
        self.skip_dims();
        let mut throws = Vec::new();
        if self.at("throws") {
            self.pos += 1;
            loop {
                throws.push(self.parse_type().ok_or_else(|| self.err("expected exception type"))?);
                if self.at(",") {
                    self.pos += 1;
                } else {
                    break;
                }
            }
        }
        let body = if self.at("{") {
            Some(self.block(BlockKind::MethodBody)?)
        } else {
            if self.at("default") {
                self.pos += 1;
                self.skip_expr(&[";"])?;
            }
            self.expect(";")?;
            None
        };
        let first = &self.toks[start];
        let last = &self.toks[self.pos - 1];
        Ok(Method {
            name,
            modifiers,
            annotations,
            return_type,
            params,
            throws,
            body,
            start_line: first.line,
            end_line: last.end_line,
            start_byte: first.start,
            end_byte: last.end,
        })
    }

    fn skip_modifiers(&mut self) -> PResult<(Vec<String>, Vec<String>)> {
        let mut mods = Vec::new();
        let mut anns = Vec::new();
        loop {
            match self.peek() {
                Some(t) if t.is("@") && !self.at_n(1, "interface") => {
                    let s = self.pos;
                    self.pos += 1;
                    self.ident_or_kw()?;
                    while self.at(".") {
                        self.pos += 1;
                        self.ident_or_kw()?;
                    }
                    if self.at("(") {
                        self.skip_balanced()?;
                    }
                    anns.push(super::lexer::compact_text(&self.toks[s..self.pos]));
                }
                Some(t) if t.kind == TokenKind::Ident && MODIFIERS.contains(&t.text.as_str()) => {
                    // `default` is a modifier only in interface method headers
                    if t.text == "default" && (self.at_n(1, ":") || self.at_n(1, "->")) {
                        break;
                    }
                    mods.push(t.text.clone());
                    self.pos += 1;
                }
                _ => break,
            }
        }
        Ok((mods, anns))
    }

    fn ident_or_kw(&mut self) -> PResult<String> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Ident => {
                self.pos += 1;
                Ok(t.text.clone())
            }
            _ => Err(self.err("expected name")),
        }
    }

    /// Parses a type at the cursor. Leaves the cursor untouched and returns
    /// `None` if no type is present.
    fn parse_type(&mut self) -> Option<String> {
        let start = self.pos;
        let ok = self.try_type();
        if ok {
            Some(super::lexer::compact_text(&self.toks[start..self.pos]))
        } else {
            self.pos = start;
            None
        }
    }

    fn try_type(&mut self) -> bool {
        while self.at("@") {
            self.pos += 1;
            if self.ident_or_kw().is_err() {
                return false;
            }
            if self.at("(") && self.skip_balanced().is_err() {
                return false;
            }
        }
        match self.peek() {
            Some(t) if PRIMITIVES.contains(&t.text.as_str()) && t.kind == TokenKind::Ident => self.pos += 1,
            Some(t) if t.is_ident() => {
                self.pos += 1;
                loop {
                    if self.at("<") && !self.skip_type_args() {
                        return false;
                    }
                    if self.at(".") && self.peek_at(1).is_some_and(|t| t.is_ident()) {
                        self.pos += 2;
                        continue;
                    }
                    break;
                }
            }
            _ => return false,
        }
        self.skip_dims();
        true
    }

    fn skip_type_args(&mut self) -> bool {
        let mut depth = 0usize;
        loop {
            let Some(t) = self.peek() else { return false };
            match t.text.as_str() {
                "<" => depth += 1,
                ">" => {
                    depth -= 1;
                    if depth == 0 {
                        self.pos += 1;
                        return true;
                    }
                }
                "," | "." | "?" | "&" | "[" | "]" | "extends" | "super" | "@" => {}
                _ if t.kind == TokenKind::Ident => {}
                _ => return false,
            }
            self.pos += 1;
        }
    }

    fn skip_dims(&mut self) -> usize {
        let mut n = 0;
        while self.at("[") && self.at_n(1, "]") {
            self.pos += 2;
            n += 1;
        }
        n
    }

    /// Skips a balanced `()`, `[]`, `{}` or `<>` group starting at the cursor.
    fn skip_balanced(&mut self) -> PResult<()> {
        let open = self.bump()?.text.clone();
        let close = match open.as_str() {
            "(" => ")",
            "[" => "]",
            "{" => "}",
            "<" => ">",
            _ => return Err(self.err("expected group")),
        };
        let mut depth = 1;
        while depth > 0 {
            let t = self.bump()?;
            if t.kind != TokenKind::Punct {
                continue;
            }
            if t.text == open {
                depth += 1;
            } else if t.text == close {
                depth -= 1;
            }
        }
        Ok(())
    }

    fn skip_past(&mut self, s: &str) -> PResult<()> {
        while !self.at(s) {
            self.bump()?;
        }
        self.pos += 1;
        Ok(())
    }

    /// Skips an expression up to (not including) one of `stops` at nesting
    /// depth zero, or an unmatched closer. Returns the consumed range.
    fn skip_expr(&mut self, stops: &[&str]) -> PResult<TokRange> {
        let start = self.pos;
        let mut depth = 0usize;
        loop {
            let Some(t) = self.peek() else {
                return Err(self.err("unterminated expression"));
            };
            if t.kind == TokenKind::Punct {
                if depth == 0 && stops.contains(&t.text.as_str()) {
                    break;
                }
                match t.text.as_str() {
                    "(" | "[" | "{" => depth += 1,
                    ")" | "]" | "}" => {
                        if depth == 0 {
                            break;
                        }
                        depth -= 1;
                    }
                    _ => {}
                }
            }
            self.pos += 1;
        }
        Ok(start..self.pos)
    }

    fn paren_expr(&mut self) -> PResult<TokRange> {
        self.expect("(")?;
        let r = self.skip_expr(&[")"])?;
        self.expect(")")?;
        Ok(r)
    }

    // ----------------------------------------------------------- statements

    fn block(&mut self, kind: BlockKind) -> PResult<Block> {
        let id = self.fresh_block_id();
        let open = self.expect("{")?.line;
        let mut stmts = Vec::new();
        while !self.at("}") {
            if self.peek().is_none() {
                return Err(self.err("unterminated block"));
            }
            stmts.push(self.statement_recovering()?);
        }
        let close = self.bump()?.line;
        Ok(Block { id, kind, braced: true, open_line: open, close_line: close, stmts })
    }

    /// Body of a control statement: a braced block or a single statement.
    fn body(&mut self, kind: BlockKind) -> PResult<Block> {
        if self.at("{") {
            return self.block(kind);
        }
        let id = self.fresh_block_id();
        let header_line = self.prev_line();
        let s = self.statement_recovering()?;
        let open_line = if s.start_line > header_line { s.start_line - 1 } else { header_line };
        Ok(Block { id, kind, braced: false, open_line, close_line: s.end_line, stmts: vec![s] })
    }

    fn statement_recovering(&mut self) -> PResult<Stmt> {
        let start = self.pos;
        match self.statement() {
            Ok(s) => Ok(s),
            Err(e) => {
                self.pos = start;
                let mut depth = 0usize;
                loop {
                    let Some(t) = self.peek() else { return Err(e) };
                    if t.kind == TokenKind::Punct {
                        match t.text.as_str() {
                            ";" if depth == 0 => {
                                self.pos += 1;
                                break;
                            }
                            "(" | "[" | "{" => depth += 1,
                            ")" | "]" if depth == 0 => {}
                            ")" | "]" | "}" => {
                                if depth == 0 {
                                    break;
                                }
                                depth -= 1;
                                if depth == 0 && t.text == "}" {
                                    self.pos += 1;
                                    break;
                                }
                            }
                            _ => {}
                        }
                    }
                    self.pos += 1;
                }
                if self.pos == start {
                    return Err(e);
                }
                self.warnings.push(format!("skipped unsupported construct ({e})"));
                Ok(self.finish(start, StmtKind::Opaque))
            }
        }
    }

    fn finish(&self, start: usize, kind: StmtKind) -> Stmt {
        let first = &self.toks[start];
        let last = &self.toks[self.pos - 1];
        Stmt { kind, start_line: first.line, end_line: last.end_line, start_byte: first.start, end_byte: last.end, toks: start..self.pos }
    }

    fn statement(&mut self) -> PResult<Stmt> {
        let start = self.pos;
        let t = self.peek().ok_or_else(|| self.err("expected statement"))?;
        let kw = if t.kind == TokenKind::Ident { t.text.as_str() } else { "" };
        let kind = match kw {
            "if" => {
                self.pos += 1;
                let cond = self.paren_expr()?;
                let then = self.body(BlockKind::Then)?;
                let otherwise = if self.at("else") {
                    self.pos += 1;
                    Some(self.body(BlockKind::Else)?)
                } else {
                    None
                };
                StmtKind::If { cond, then, otherwise }
            }
            "for" => {
                self.pos += 1;
                self.for_rest()?
            }
            "while" => {
                self.pos += 1;
                let cond = self.paren_expr()?;
                let body = self.body(BlockKind::Loop)?;
                StmtKind::While { cond, body }
            }
            "do" => {
                self.pos += 1;
                let body = self.body(BlockKind::Loop)?;
                self.expect("while")?;
                let cond = self.paren_expr()?;
                self.expect(";")?;
                StmtKind::DoWhile { body, cond }
            }
            "try" => {
                self.pos += 1;
                self.try_rest()?
            }
            "switch" => {
                self.pos += 1;
                let selector = self.paren_expr()?;
                let (open_line, close_line, groups) = self.switch_body()?;
                StmtKind::Switch { selector, open_line, close_line, groups }
            }
            "return" => {
                self.pos += 1;
                let e = if self.at(";") { None } else { Some(self.skip_expr(&[";"])?) };
                self.expect(";")?;
                StmtKind::Return(e)
            }
            "throw" => {
                self.pos += 1;
                let e = self.skip_expr(&[";"])?;
                self.expect(";")?;
                StmtKind::Throw(e)
            }
            "break" | "continue" => {
                self.pos += 1;
                let label = if self.at(";") { None } else { Some(self.ident()?) };
                self.expect(";")?;
                if kw == "break" {
                    StmtKind::Break(label)
                } else {
                    StmtKind::Continue(label)
                }
            }
            "synchronized" if self.at_n(1, "(") => {
                self.pos += 1;
                let lock = self.paren_expr()?;
                let body = self.block(BlockKind::Synchronized)?;
                StmtKind::Synchronized { lock, body }
            }
            "assert" => {
                self.pos += 1;
                let e = self.skip_expr(&[";"])?;
                self.expect(";")?;
                StmtKind::Assert(e)
            }
            "yield" if self.peek_at(1).is_some_and(|n| !matches!(n.text.as_str(), "=" | "." | "(" | "[" | "++" | "--" | ";")) => {
                self.pos += 1;
                let e = self.skip_expr(&[";"])?;
                self.expect(";")?;
                StmtKind::Yield(e)
            }
            "class" | "interface" | "enum" | "abstract" | "static" => {
                self.skip_modifiers()?;
                if !self.at_type_keyword() {
                    return Err(self.err("expected local type declaration"));
                }
                while !self.at("{") {
                    self.bump()?;
                }
                self.skip_balanced()?;
                StmtKind::Opaque
            }
            "else" | "case" | "catch" | "finally" => return Err(self.err("misplaced keyword")),
            _ if t.is("{") => StmtKind::Block(self.block(BlockKind::Plain)?),
            _ if t.is(";") => {
                self.pos += 1;
                StmtKind::Empty
            }
            _ if t.is_ident() && self.at_n(1, ":") => {
                let label = self.ident()?;
                self.pos += 1;
                let body = self.body(BlockKind::Labeled)?;
                StmtKind::Labeled { label, body }
            }
            _ if t.is("@") && self.at_n(1, "interface") => return Err(self.err("unsupported local annotation type")),
            _ => {
                if let Some(decl) = self.try_local_var()? {
                    self.expect(";")?;
                    StmtKind::LocalVar(decl)
                } else {
                    if t.kind == TokenKind::Ident && is_keyword(&t.text) && !matches!(kw, "this" | "super" | "new" | "true" | "false" | "null") {
                        return Err(self.err("unexpected keyword"));
                    }
                    let e = self.skip_expr(&[";"])?;
                    if e.is_empty() {
                        return Err(self.err("expected expression"));
                    }
                    self.expect(";")?;
                    StmtKind::Expr(e)
                }
            }
        };
        Ok(self.finish(start, kind))
    }

    /// Speculatively parses `[final|@Ann]* Type name ...`. Consumes the
    /// declarators (not the terminating `;`) on success.
    fn try_local_var(&mut self) -> PResult<Option<VarDecl>> {
        let save = self.pos;
        if self.skip_modifiers().is_err() {
            self.pos = save;
            return Ok(None);
        }
        let Some(ty) = self.parse_type() else {
            self.pos = save;
            return Ok(None);
        };
        let named = self.peek().is_some_and(|t| t.is_ident()) && self.peek_at(1).is_some_and(|n| matches!(n.text.as_str(), "=" | ";" | "," | "[" | ":"));
        if !named {
            self.pos = save;
            return Ok(None);
        }
        let declarators = self.declarators(&ty, &[";"])?;
        Ok(Some(VarDecl { ty, declarators }))
    }

    fn declarators(&mut self, ty: &str, stops: &[&str]) -> PResult<Vec<Declarator>> {
        let mut out = Vec::new();
        loop {
            let s = self.pos;
            let line = self.line();
            let name = self.ident()?;
            let dims = self.skip_dims();
            let init = if self.at("=") {
                self.pos += 1;
                Some(self.declarator_init(stops)?)
            } else {
                None
            };
            out.push(Declarator { name, ty: format!("{ty}{}", "[]".repeat(dims)), line, init, toks: s..self.pos });
            if self.at(",") {
                self.pos += 1;
                continue;
            }
            break;
        }
        Ok(out)
    }

    /// Initializer up to a stop token or a `,` that starts another declarator.
    fn declarator_init(&mut self, stops: &[&str]) -> PResult<TokRange> {
        let start = self.pos;
        loop {
            let mut all: Vec<&str> = stops.to_vec();
            all.push(",");
            self.skip_expr(&all)?;
            if self.at(",") {
                let next_is_decl =
                    self.peek_at(1).is_some_and(|t| t.is_ident()) && self.peek_at(2).is_some_and(|t| matches!(t.text.as_str(), "=" | "," | ";" | "["));
                if !next_is_decl {
                    self.pos += 1;
                    continue;
                }
            }
            break;
        }
        Ok(start..self.pos)
    }

    fn for_rest(&mut self) -> PResult<StmtKind> {
        let header_start = self.pos;
        self.expect("(")?;
        // enhanced for: look for a depth-0 `:` before the closing paren
        let save = self.pos;
        let mut depth = 0usize;
        let mut enhanced = false;
        while let Some(t) = self.peek() {
            match t.text.as_str() {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" if depth == 0 => break,
                ")" | "]" | "}" => depth -= 1,
                ";" if depth == 0 => break,
                ":" if depth == 0 && t.kind == TokenKind::Punct => {
                    enhanced = true;
                    break;
                }
                _ => {}
            }
            self.pos += 1;
        }
        self.pos = save;
        if enhanced {
            let decl_start = self.pos;
            self.skip_modifiers()?;
            let ty = self.parse_type().ok_or_else(|| self.err("expected loop variable type"))?;
            let line = self.line();
            let name = self.ident()?;
            let var = Declarator { name, ty, line, init: None, toks: decl_start..self.pos };
            self.expect(":")?;
            let iterable = self.skip_expr(&[")"])?;
            self.expect(")")?;
            let header = header_start..self.pos;
            let body = self.body(BlockKind::Loop)?;
            return Ok(StmtKind::ForEach { var, iterable, header, body });
        }
        let init_start = self.pos;
        let init = if self.at(";") {
            ForInit::None
        } else if let Some(decl) = self.try_local_var_in_for()? {
            ForInit::Decl(decl, init_start..self.pos)
        } else {
            let mut exprs = Vec::new();
            loop {
                exprs.push(self.skip_expr(&[",", ";"])?);
                if self.at(",") {
                    self.pos += 1;
                } else {
                    break;
                }
            }
            ForInit::Exprs(exprs)
        };
        self.expect(";")?;
        let cond = if self.at(";") { None } else { Some(self.skip_expr(&[";"])?) };
        self.expect(";")?;
        let mut update = Vec::new();
        while !self.at(")") {
            update.push(self.skip_expr(&[",", ")"])?);
            if self.at(",") {
                self.pos += 1;
            }
        }
        self.expect(")")?;
        let body = self.body(BlockKind::Loop)?;
        Ok(StmtKind::For { init, cond, update, body })
    }

    fn try_local_var_in_for(&mut self) -> PResult<Option<VarDecl>> {
        let save = self.pos;
        if self.skip_modifiers().is_err() {
            self.pos = save;
            return Ok(None);
        }
        let Some(ty) = self.parse_type() else {
            self.pos = save;
            return Ok(None);
        };
        if !(self.peek().is_some_and(|t| t.is_ident()) && self.peek_at(1).is_some_and(|n| matches!(n.text.as_str(), "=" | ";" | "," | "["))) {
            self.pos = save;
            return Ok(None);
        }
        let declarators = self.declarators(&ty, &[";"])?;
        Ok(Some(VarDecl { ty, declarators }))
    }

    fn try_rest(&mut self) -> PResult<StmtKind> {
        let mut resources = Vec::new();
        if self.at("(") {
            self.pos += 1;
            while !self.at(")") {
                let rs = self.pos;
                let save = self.pos;
                self.skip_modifiers()?;
                let decl = match self.parse_type() {
                    Some(ty) if self.peek().is_some_and(|t| t.is_ident()) && self.at_n(1, "=") => {
                        let line = self.line();
                        let name = self.ident()?;
                        self.pos += 1;
                        let init = self.skip_expr(&[";", ")"])?;
                        Some(Declarator { name, ty, line, init: Some(init), toks: rs..self.pos })
                    }
                    _ => None,
                };
                match decl {
                    Some(d) => resources.push(Resource::Decl(d, rs..self.pos)),
                    None => {
                        self.pos = save;
                        resources.push(Resource::Expr(self.skip_expr(&[";", ")"])?));
                    }
                }
                if self.at(";") {
                    self.pos += 1;
                }
            }
            self.pos += 1;
        }
        let body = self.block(BlockKind::Try)?;
        let mut catches = Vec::new();
        while self.at("catch") {
            let hs = self.pos;
            self.pos += 1;
            self.expect("(")?;
            self.skip_modifiers()?;
            let mut ty = self.parse_type().ok_or_else(|| self.err("expected exception type"))?;
            while self.at("|") {
                self.pos += 1;
                let alt = self.parse_type().ok_or_else(|| self.err("expected exception type"))?;
                ty = format!("{ty} | {alt}");
            }
            let line = self.line();
            let ds = self.pos;
            let name = self.ident()?;
            let param = Declarator { name, ty, line, init: None, toks: ds..self.pos };
            self.expect(")")?;
            let header = hs..self.pos;
            let body = self.block(BlockKind::Catch)?;
            catches.push(CatchClause { param, header, body });
        }
        let finally = if self.at("finally") {
            self.pos += 1;
            Some(self.block(BlockKind::Finally)?)
        } else {
            None
        };
        if catches.is_empty() && finally.is_none() && resources.is_empty() {
            return Err(self.err("try without catch or finally"));
        }
        Ok(StmtKind::Try { resources, body, catches, finally })
    }

    fn switch_body(&mut self) -> PResult<(usize, usize, Vec<CaseGroup>)> {
        let open_line = self.expect("{")?.line;
        let mut groups: Vec<CaseGroup> = Vec::new();
        while !self.at("}") {
            if self.peek().is_none() {
                return Err(self.err("unterminated switch"));
            }
            let label_line = self.line();
            let mut labels = Vec::new();
            let is_default;
            if self.at("default") {
                self.pos += 1;
                is_default = true;
            } else if self.at("case") {
                self.pos += 1;
                is_default = false;
                loop {
                    labels.push(self.skip_expr(&[",", ":", "->"])?);
                    if self.at(",") {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
            } else {
                return Err(self.err("expected `case` or `default`"));
            }
            let id = self.fresh_block_id();
            if self.at("->") {
                self.pos += 1;
                let body = if self.at("{") {
                    let mut b = self.block(BlockKind::Case)?;
                    b.kind = BlockKind::Case;
                    b
                } else {
                    let s = if self.at("throw") {
                        self.statement()?
                    } else {
                        let st = self.pos;
                        let e = self.skip_expr(&[";"])?;
                        self.expect(";")?;
                        self.finish(st, StmtKind::Expr(e))
                    };
                    Block { id, kind: BlockKind::Case, braced: false, open_line: label_line, close_line: s.end_line, stmts: vec![s] }
                };
                groups.push(CaseGroup { labels, is_default, arrow: true, label_line, body });
                continue;
            }
            self.expect(":")?;
            let mut stmts = Vec::new();
            while !(self.at("case") || self.at("default") && (self.at_n(1, ":") || self.at_n(1, "->")) || self.at("}")) {
                if self.peek().is_none() {
                    return Err(self.err("unterminated switch"));
                }
                stmts.push(self.statement_recovering()?);
            }
            // closes just before the next label, or at the switch's `}`
            let close_line = self.line();
            groups.push(CaseGroup {
                labels,
                is_default,
                arrow: false,
                label_line,
                body: Block { id, kind: BlockKind::Case, braced: false, open_line: label_line, close_line, stmts },
            });
        }
        let close_line = self.bump()?.line;
        Ok((open_line, close_line, groups))
    }
}
