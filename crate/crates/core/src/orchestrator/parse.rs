//! Parsing agent replies: JSON command envelopes, fenced code blocks and the
//! insertion tag.

use serde_json::{Map, Value};

use super::{AgentTurn, OrchestratorError, Payload, ToolCommand};

pub const NEED_LOGGING_TAG: &str = "<<need_logging>>";

struct Fence<'a> {
    lang: &'a str,
    body: String,
    /// Byte offset of the opening fence line.
    start: usize,
}

fn fences(text: &str) -> Vec<Fence<'_>> {
    let mut out = Vec::new();
    let mut open: Option<(&str, usize, Vec<&str>)> = None;
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        match open.take() {
            None => {
                if let Some(rest) = trimmed.strip_prefix("```") {
                    open = Some((rest.trim(), offset, Vec::new()));
                }
            }
            Some((lang, start, mut body)) => {
                if trimmed == "```" {
                    out.push(Fence { lang, body: trim_blank_lines(&body), start });
                } else {
                    body.push(line.trim_end_matches(['\n', '\r']));
                    open = Some((lang, start, body));
                }
            }
        }
        offset += line.len();
    }
    out
}

fn trim_blank_lines(lines: &[&str]) -> String {
    let first = lines.iter().position(|l| !l.trim().is_empty());
    let last = lines.iter().rposition(|l| !l.trim().is_empty());
    match (first, last) {
        (Some(a), Some(b)) => lines[a..=b].join("\n"),
        _ => String::new(),
    }
}

/// Contents of the last fenced block, blank edge lines removed.
pub fn extract_code_block(text: &str) -> Result<String, OrchestratorError> {
    fences(text).pop().map(|f| f.body).ok_or(OrchestratorError::NoCodeBlock)
}

/// First JSON object in `text` that carries `thoughts` or `command`.
fn find_envelope(text: &str) -> Option<Map<String, Value>> {
    for (i, _) in text.match_indices('{') {
        let mut stream = serde_json::Deserializer::from_str(&text[i..]).into_iter::<Value>();
        if let Some(Ok(Value::Object(obj))) = stream.next() {
            if obj.contains_key("command") || obj.contains_key("thoughts") {
                return Some(obj);
            }
        }
    }
    None
}

fn command_of(v: &Value) -> Result<ToolCommand, String> {
    let obj = v.as_object().ok_or("\"command\" must be an object")?;
    let tool = obj.get("tool").and_then(Value::as_str).ok_or("\"command.tool\" must be a string")?;
    let args = match obj.get("args") {
        None | Some(Value::Null) => Map::new(),
        Some(Value::Object(m)) => m.clone(),
        Some(_) => return Err("\"command.args\" must be an object".into()),
    };
    Ok(ToolCommand { tool: tool.to_string(), args })
}

/// A JSON envelope with `command` is a tool call; otherwise the last fenced
/// (non-JSON) code block is the final answer.
pub fn parse_agent_response(text: &str) -> Result<AgentTurn, OrchestratorError> {
    let envelope = find_envelope(text);
    let thoughts = envelope.as_ref().and_then(|o| o.get("thoughts")).and_then(Value::as_str).map(str::to_string);
    if let Some(cmd) = envelope.as_ref().and_then(|o| o.get("command")).filter(|c| !c.is_null()) {
        let command = command_of(cmd).map_err(OrchestratorError::MalformedResponse)?;
        return Ok(AgentTurn { thoughts: thoughts.unwrap_or_default(), payload: Payload::Tool(command) });
    }
    let code = fences(text).into_iter().rfind(|f| !f.lang.eq_ignore_ascii_case("json"));
    match code {
        Some(f) => {
            let thoughts = thoughts.unwrap_or_else(|| text[..f.start].trim().to_string());
            Ok(AgentTurn { thoughts, payload: Payload::Final(f.body) })
        }
        None => Err(OrchestratorError::MalformedResponse("expected a JSON object with \"command\" or a fenced code block".into())),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagLocation {
    pub line: usize,
    pub code: String,
    pub warnings: Vec<String>,
}

/// First line carrying the tag; later tags only produce a warning.
pub fn locate_need_logging_tag(code: &str) -> Result<TagLocation, OrchestratorError> {
    let lines: Vec<usize> = code.lines().enumerate().filter(|(_, l)| l.contains(NEED_LOGGING_TAG)).map(|(i, _)| i + 1).collect();
    let first = *lines.first().ok_or(OrchestratorError::MissingTag)?;
    let warnings = if lines.len() > 1 { vec![format!("{} tags found on lines {:?}; using line {first}", lines.len(), lines)] } else { Vec::new() };
    Ok(TagLocation { line: first, code: code.to_string(), warnings })
}
