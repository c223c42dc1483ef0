//! Tool registry and dispatch. Errors come back as observation text.

use serde::Serialize;
use serde_json::{Map, Value};

use super::{Telemetry, ToolCommand};
use crate::analysis::{backward_slice_with, extract_variables, parse_method, MethodTree, SliceMode};
use crate::retrieval::{Bm25Index, RetrievalPair};

pub const SIMILAR_CASE_RETRIEVAL: &str = "similar_case_retrieval";
pub const VARIABLE_EXTRACTOR: &str = "variable_extractor";
pub const BACKWARD_SLICING: &str = "backward_slicing";
pub const TOOL_NAMES: [&str; 3] = [SIMILAR_CASE_RETRIEVAL, VARIABLE_EXTRACTOR, BACKWARD_SLICING];

pub const TOOL_HELP: &str = "\
- similar_case_retrieval {\"code\"?: string, \"k\"?: integer}: methods similar to the target (or to `code`), shown before and after a logging statement was added.
- variable_extractor {\"line\": integer}: class fields, parameters and local variables visible at a line.
- backward_slicing {\"line\": integer}: placement type, method facts, data dependencies and enclosing conditions at a line.";

/// What the tools see. Line arguments refer to the code shown to the agent;
/// when that code carries the tag line, lines below it shift up by one and
/// the tag line itself is an insertion point.
pub struct ToolContext<'a> {
    pub source: &'a str,
    pub tag_line: Option<usize>,
    pub cases: Option<&'a Bm25Index<RetrievalPair>>,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToolResult {
    /// Raw JSON result.
    pub json: String,
    /// Text handed to the agent.
    pub refined: String,
}

pub fn format_retrieved_case(pair: &RetrievalPair) -> String {
    format!(
        "=== CASE {} ===\n--- BEFORE (without the logging statement) ---\n{}\n--- AFTER (with the logging statement) ---\n{}\n=== END CASE ===",
        pair.id, pair.code_before, pair.code_after
    )
}

#[derive(Serialize)]
struct RetrievedCase<'a> {
    id: &'a str,
    score: f64,
    code_before: &'a str,
    code_after: &'a str,
}

fn check_keys(args: &Map<String, Value>, required: &[&str], optional: &[&str]) -> Result<(), String> {
    for r in required {
        if !args.contains_key(*r) {
            return Err(format!("missing required argument \"{r}\""));
        }
    }
    for k in args.keys() {
        if !required.contains(&k.as_str()) && !optional.contains(&k.as_str()) {
            return Err(format!("unexpected argument \"{k}\""));
        }
    }
    Ok(())
}

fn positive_int(args: &Map<String, Value>, key: &str) -> Result<Option<usize>, String> {
    match args.get(key) {
        None => Ok(None),
        Some(v) => v.as_u64().filter(|n| *n >= 1).map(|n| Some(n as usize)).ok_or_else(|| format!("argument \"{key}\" must be a positive integer")),
    }
}

impl ToolContext<'_> {
    /// Maps an agent line to the unmarked source, with the slice mode to use.
    fn map_line(&self, line: usize) -> (usize, SliceMode) {
        match self.tag_line {
            Some(t) if line == t => (line, SliceMode::Insertion),
            Some(t) if line > t => (line - 1, SliceMode::Auto),
            _ => (line, SliceMode::Auto),
        }
    }

    fn method(&self) -> Result<MethodTree, String> {
        parse_method(self.source).map_err(|e| e.to_string())
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<ToolResult, String> {
    let json = serde_json::to_string(v).map_err(|e| e.to_string())?;
    let refined = serde_json::to_string_pretty(v).map_err(|e| e.to_string())?;
    Ok(ToolResult { json, refined })
}

fn run(command: &ToolCommand, ctx: &ToolContext<'_>) -> Result<ToolResult, String> {
    let args = &command.args;
    match command.tool.as_str() {
        SIMILAR_CASE_RETRIEVAL => {
            check_keys(args, &[], &["code", "k"])?;
            let code = match args.get("code") {
                None => ctx.source,
                Some(Value::String(s)) => s.as_str(),
                Some(_) => return Err("argument \"code\" must be a string".into()),
            };
            let k = positive_int(args, "k")?.unwrap_or(ctx.k);
            let index = ctx.cases.ok_or("no retrieval index is loaded")?;
            let hits = index.retrieve(code, k).map_err(|e| e.to_string())?;
            let cases: Vec<RetrievedCase> =
                hits.iter().map(|(p, s)| RetrievedCase { id: &p.id, score: *s, code_before: &p.code_before, code_after: &p.code_after }).collect();
            let json = serde_json::to_string(&cases).map_err(|e| e.to_string())?;
            let refined = hits.iter().map(|(p, _)| format_retrieved_case(p)).collect::<Vec<_>>().join("\n\n");
            Ok(ToolResult { json, refined })
        }
        VARIABLE_EXTRACTOR | BACKWARD_SLICING => {
            check_keys(args, &["line"], &[])?;
            let line = positive_int(args, "line")?.expect("checked above");
            let (line, mode) = ctx.map_line(line);
            let m = ctx.method()?;
            if command.tool == VARIABLE_EXTRACTOR {
                to_json(&extract_variables(&m, line).map_err(|e| e.to_string())?)
            } else {
                to_json(&backward_slice_with(&m, line, mode).map_err(|e| e.to_string())?)
            }
        }
        _ => Err("unknown tool".into()),
    }
}

/// Runs one tool call; every call and every failure is counted.
pub fn dispatch_tool(command: &ToolCommand, ctx: &ToolContext<'_>, telemetry: &mut Telemetry) -> Result<ToolResult, String> {
    telemetry.tool_calls += 1;
    let out = run(command, ctx);
    if out.is_err() {
        telemetry.tool_failures += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::parse_method;
    use crate::retrieval::Bm25Params;
    use serde_json::json;

    const SRC: &str = "void f(int p) {\n  int a = p;\n  if (a > 0) {\n    use(a);\n  }\n}";

    fn cmd(tool: &str, args: Value) -> ToolCommand {
        ToolCommand { tool: tool.into(), args: args.as_object().unwrap().clone() }
    }

    fn ctx() -> ToolContext<'static> {
        ToolContext { source: SRC, tag_line: None, cases: None, k: 1 }
    }

    #[test]
    fn variable_extractor_matches_direct_call() {
        let mut t = Telemetry::default();
        let r = dispatch_tool(&cmd(VARIABLE_EXTRACTOR, json!({"line": 4})), &ctx(), &mut t).unwrap();
        let direct = extract_variables(&parse_method(SRC).unwrap(), 4).unwrap();
        assert_eq!(r.json, serde_json::to_string(&direct).unwrap());
        assert_eq!((t.tool_calls, t.tool_failures), (1, 0));
    }

    #[test]
    fn validation_errors_are_counted() {
        let mut t = Telemetry::default();
        assert_eq!(dispatch_tool(&cmd("grep", json!({})), &ctx(), &mut t).unwrap_err(), "unknown tool");
        let e = dispatch_tool(&cmd(BACKWARD_SLICING, json!({"row": 3})), &ctx(), &mut t).unwrap_err();
        assert!(e.contains("\"line\""), "{e}");
        let e = dispatch_tool(&cmd(BACKWARD_SLICING, json!({"line": "3"})), &ctx(), &mut t).unwrap_err();
        assert!(e.contains("positive integer"));
        let e = dispatch_tool(&cmd(BACKWARD_SLICING, json!({"line": 3, "depth": 1})), &ctx(), &mut t).unwrap_err();
        assert!(e.contains("unexpected argument \"depth\""));
        let e = dispatch_tool(&cmd(VARIABLE_EXTRACTOR, json!({"line": 99})), &ctx(), &mut t).unwrap_err();
        assert!(e.contains("outside"));
        assert_eq!((t.tool_calls, t.tool_failures), (5, 5));
    }

    #[test]
    fn tag_line_shifts_later_lines() {
        let c = ToolContext { source: SRC, tag_line: Some(3), cases: None, k: 1 };
        let mut t = Telemetry::default();
        let below = dispatch_tool(&cmd(VARIABLE_EXTRACTOR, json!({"line": 5})), &c, &mut t).unwrap();
        let direct = extract_variables(&parse_method(SRC).unwrap(), 4).unwrap();
        assert_eq!(below.json, serde_json::to_string(&direct).unwrap());
        let at = dispatch_tool(&cmd(BACKWARD_SLICING, json!({"line": 3})), &c, &mut t).unwrap();
        assert!(at.json.contains("int a = p;"));
    }

    #[test]
    fn retrieval_renders_cases() {
        let pairs = vec![
            RetrievalPair::new("c1", "void g(int p) { int a = p; }", "void g(int p) { int a = p; log.info(\"a {}\", a); }").unwrap(),
            RetrievalPair::new("c2", "void h() { close(); }", "void h() { log.debug(\"closing\"); close(); }").unwrap(),
        ];
        let index = Bm25Index::build(pairs.clone(), Bm25Params::default()).unwrap();
        let c = ToolContext { source: SRC, tag_line: None, cases: Some(&index), k: 1 };
        let mut t = Telemetry::default();
        let r = dispatch_tool(&cmd(SIMILAR_CASE_RETRIEVAL, json!({})), &c, &mut t).unwrap();
        assert_eq!(r.refined, format_retrieved_case(&pairs[0]));
        let no_index = dispatch_tool(&cmd(SIMILAR_CASE_RETRIEVAL, json!({})), &ctx(), &mut t);
        assert!(no_index.is_err());
    }

    #[test]
    fn case_format_contains_both_sides() {
        let p = RetrievalPair::new("x", "a();\nb();", "a();\nlog.info(\"x\");\nb();").unwrap();
        let s = format_retrieved_case(&p);
        assert!(s.contains(&p.code_before) && s.contains(&p.code_after));
        let section = |from: &str, to: &str| s.lines().skip_while(|l| !l.starts_with(from)).skip(1).take_while(|l| !l.starts_with(to)).count();
        assert_eq!(section("--- AFTER", "=== END"), section("--- BEFORE", "--- AFTER") + 1);
    }
}
