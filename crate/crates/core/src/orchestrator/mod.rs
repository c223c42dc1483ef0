//! Two-stage pipeline: the whether-to-log gate, then Locator and Generator
//! agent loops with tool dispatch, retries and a global deadline.

mod parse;
mod tools;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::analysis::{parse_log_statement, LoggingStatement};
use crate::corpus::{JudgerSample, MethodRecord};
use crate::judger::{build_judger_prompt, parse_judge_label, JudgeDecision, JudgerError, Label, ModelBackend};
use crate::retrieval::{Bm25Index, RetrievalPair};

pub use parse::{extract_code_block, locate_need_logging_tag, parse_agent_response, TagLocation, NEED_LOGGING_TAG};
pub use tools::{dispatch_tool, format_retrieved_case, ToolContext, ToolResult, TOOL_HELP, TOOL_NAMES};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrchestratorError {
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("no fenced code block in response")]
    NoCodeBlock,
    #[error("no {NEED_LOGGING_TAG} tag in code")]
    MissingTag,
    #[error("{role} used all {turns} turns without a final answer")]
    TurnBudgetExceeded { role: Role, turns: usize },
    #[error("global timeout of {0:?} exceeded")]
    GlobalTimeout(Duration),
    #[error("retries exhausted: {0}")]
    RetriesExhausted(String),
    #[error("generated code has no logging statement at the tag position: {0}")]
    NoLogStatement(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCommand {
    pub tool: String,
    pub args: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Tool(ToolCommand),
    Final(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentTurn {
    pub thoughts: String,
    pub payload: Payload,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Judger,
    Locator,
    Generator,
}

impl std::fmt::Display for Role {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Role::Judger => "judger",
            Role::Locator => "locator",
            Role::Generator => "generator",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OrchestratorConfig {
    pub max_turns: usize,
    /// Seconds for the whole pipeline of one method.
    pub global_timeout: f64,
    pub retry_limit: usize,
    pub retrieval_k: usize,
    /// Seconds per backend call, capped by the time left.
    pub request_timeout: f64,
    pub temperature: f64,
    /// Record wall time in telemetry (makes output run-dependent).
    pub record_timings: bool,
}

impl Default for OrchestratorConfig {
    fn default() -> Self {
        OrchestratorConfig {
            max_turns: 6,
            global_timeout: 300.0,
            retry_limit: 2,
            retrieval_k: 1,
            request_timeout: 120.0,
            temperature: 0.0,
            record_timings: false,
        }
    }
}

impl OrchestratorConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_turns == 0 || self.retrieval_k == 0 {
            return Err("max_turns and retrieval_k must be positive".into());
        }
        if !(self.global_timeout > 0.0 && self.request_timeout > 0.0) {
            return Err("global_timeout and request_timeout must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Telemetry {
    pub tool_calls: usize,
    pub tool_failures: usize,
    pub retries: usize,
    pub agent_calls: usize,
    pub judge_calls: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineResult {
    pub method_id: String,
    /// `None` when the gate itself failed.
    pub decision: Option<Label>,
    pub located_line: Option<usize>,
    pub generated_statement: Option<LoggingStatement>,
    pub final_code: Option<String>,
    /// Reason for a controlled failure.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    pub telemetry: Telemetry,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl PipelineResult {
    pub fn is_ok(&self) -> bool {
        self.failure.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub role: Role,
    pub turn: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// A successful tool result carried from the Locator to the Generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CarriedOutput {
    pub tool: String,
    pub args: String,
    pub text: String,
}

impl CarriedOutput {
    pub fn render(&self) -> String {
        format!("#### {}({})\n{}", self.tool, self.args, self.text)
    }
}

#[derive(Debug, Clone)]
pub struct AgentOutcome {
    /// Code of the final answer.
    pub final_code: String,
    pub carried: Vec<CarriedOutput>,
}

fn protocol(final_rule: &str) -> String {
    format!(
        "### Protocol\n\
         To call a tool, reply with one JSON object: {{\"thoughts\": \"...\", \"command\": {{\"tool\": \"<name>\", \"args\": {{...}}}}}}.\n\
         Line numbers count from 1 at the first line of the method as shown.\n\
         {final_rule}"
    )
}

pub fn build_locator_prompt(code: &str) -> String {
    format!(
        "### Role\nYou are the Locator. Choose the single line of the target method where one new logging statement belongs.\n\n\
         ### Tools\n{TOOL_HELP}\n\n\
         {}\n\n\
         ### Target method\n```java\n{code}\n```\n",
        protocol(&format!(
            "When done, reply with the whole method in one fenced code block, adding a line that contains only {NEED_LOGGING_TAG} where the statement should go."
        ))
    )
}

pub fn build_generator_prompt(marked_code: &str, carried: &[String]) -> Result<String, OrchestratorError> {
    locate_need_logging_tag(marked_code)?;
    let context = if carried.is_empty() { "(no tool results yet)".to_string() } else { carried.join("\n\n") };
    Ok(format!(
        "### Role\nYou are the Generator. Replace the {NEED_LOGGING_TAG} line of the method below with one complete logging statement: level, message template and variables.\n\n\
         ### Context from earlier analysis\n{context}\n\n\
         ### Tools\n{TOOL_HELP}\n\n\
         {}\n\n\
         ### Marked method\n```java\n{marked_code}\n```\n",
        protocol(&format!("When done, reply with the whole method in one fenced code block, with {NEED_LOGGING_TAG} replaced."))
    ))
}

struct Budget {
    start: Instant,
    total: Duration,
    request: Duration,
}

impl Budget {
    fn new(cfg: &OrchestratorConfig) -> Self {
        Budget { start: Instant::now(), total: Duration::from_secs_f64(cfg.global_timeout), request: Duration::from_secs_f64(cfg.request_timeout) }
    }

    /// Timeout for the next backend call, or `GlobalTimeout` if none is left.
    fn next_call(&self) -> Result<Duration, OrchestratorError> {
        let left = self.total.saturating_sub(self.start.elapsed());
        if left.is_zero() {
            return Err(OrchestratorError::GlobalTimeout(self.total));
        }
        Ok(left.min(self.request))
    }
}

const PARSE_HINT: &str =
    "Your last reply could not be used. Reply with one JSON object holding \"thoughts\" and \"command\", or with the final method in a fenced code block.";

/// ReAct loop: completion, parse, tool dispatch with the observation appended
/// to the prompt, until a final answer. Backend failures and unparseable
/// replies share a budget of `retry_limit` retries.
pub fn run_agent_loop(
    role: Role,
    initial_prompt: &str,
    backend: &dyn ModelBackend,
    ctx: &ToolContext<'_>,
    config: &OrchestratorConfig,
    telemetry: &mut Telemetry,
) -> Result<AgentOutcome, OrchestratorError> {
    let budget = Budget::new(config);
    run_loop(role, initial_prompt, backend, ctx, config, &budget, telemetry, &mut Vec::new())
}

#[allow(clippy::too_many_arguments)]
fn run_loop(
    role: Role,
    initial_prompt: &str,
    backend: &dyn ModelBackend,
    ctx: &ToolContext<'_>,
    config: &OrchestratorConfig,
    budget: &Budget,
    telemetry: &mut Telemetry,
    transcript: &mut Vec<TranscriptEntry>,
) -> Result<AgentOutcome, OrchestratorError> {
    let mut prompt = initial_prompt.to_string();
    let mut turns = 0;
    let mut retries_left = config.retry_limit;
    let mut carried: Vec<CarriedOutput> = Vec::new();
    let entry = |turn, response: Option<&str>, observation: Option<String>, error: Option<String>| TranscriptEntry {
        role,
        turn,
        response: response.map(str::to_string),
        observation,
        error,
    };
    loop {
        let timeout = budget.next_call()?;
        telemetry.agent_calls += 1;
        let reply = backend.complete(&prompt, config.temperature, timeout);
        let text = match reply {
            Ok(t) => t,
            Err(e) => {
                budget.next_call()?;
                transcript.push(entry(turns, None, None, Some(e.to_string())));
                if retries_left == 0 {
                    return Err(OrchestratorError::RetriesExhausted(e.to_string()));
                }
                retries_left -= 1;
                telemetry.retries += 1;
                continue;
            }
        };
        let turn = match parse_agent_response(&text) {
            Ok(t) => t,
            Err(e) => {
                transcript.push(entry(turns, Some(&text), None, Some(e.to_string())));
                if retries_left == 0 {
                    return Err(OrchestratorError::RetriesExhausted(e.to_string()));
                }
                retries_left -= 1;
                telemetry.retries += 1;
                prompt.push_str(&format!("\n### Reply\n{text}\n\n### Error\n{e}. {PARSE_HINT}\n"));
                continue;
            }
        };
        turns += 1;
        match turn.payload {
            Payload::Final(code) => {
                transcript.push(entry(turns, Some(&text), None, None));
                return Ok(AgentOutcome { final_code: code, carried });
            }
            Payload::Tool(cmd) => {
                let observation = match dispatch_tool(&cmd, ctx, telemetry) {
                    Ok(r) => {
                        let args = serde_json::to_string(&cmd.args).unwrap_or_default();
                        let c = CarriedOutput { tool: cmd.tool.clone(), args, text: r.refined.clone() };
                        if !carried.contains(&c) {
                            carried.push(c);
                        }
                        r.refined
                    }
                    Err(msg) => format!("ToolError: {msg}"),
                };
                transcript.push(entry(turns, Some(&text), Some(observation.clone()), None));
                if turns >= config.max_turns {
                    return Err(OrchestratorError::TurnBudgetExceeded { role, turns });
                }
                prompt.push_str(&format!("\n### Reply {turns}\n{text}\n\n### Observation {turns}\n{observation}\n"));
            }
        }
    }
}

/// Both indexes used at inference time.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Resources {
    /// Before/after pairs for `similar_case_retrieval`.
    pub cases: Option<Bm25Index<RetrievalPair>>,
    /// Labelled samples for the gate's one-shot example.
    pub examples: Option<Bm25Index<JudgerSample>>,
}

fn judge_prompt(record: &MethodRecord, resources: &Resources) -> Result<String, String> {
    if let Some(idx) = &resources.examples {
        let hits = idx.retrieve(&record.source, 1).map_err(|e| e.to_string())?;
        return Ok(build_judger_prompt(&record.source, &hits[0].0.target_code, hits[0].0.label));
    }
    if let Some(idx) = &resources.cases {
        let hits = idx.retrieve(&record.source, 1).map_err(|e| e.to_string())?;
        return Ok(build_judger_prompt(&record.source, &hits[0].0.code_before, Label::Log));
    }
    Err("no example index for the whether-to-log prompt".into())
}

fn judge(
    prompt: &str,
    backend: &dyn ModelBackend,
    config: &OrchestratorConfig,
    budget: &Budget,
    telemetry: &mut Telemetry,
    transcript: &mut Vec<TranscriptEntry>,
) -> Result<JudgeDecision, String> {
    let mut retries_left = config.retry_limit;
    loop {
        let timeout = budget.next_call().map_err(|e| e.to_string())?;
        telemetry.judge_calls += 1;
        let err = match backend.complete(prompt, config.temperature, timeout) {
            Ok(text) => match parse_judge_label(&text) {
                Ok(d) => {
                    transcript.push(TranscriptEntry { role: Role::Judger, turn: 1, response: Some(text), observation: None, error: None });
                    return Ok(d);
                }
                Err(e) => {
                    transcript.push(TranscriptEntry { role: Role::Judger, turn: 1, response: Some(text), observation: None, error: Some(e.to_string()) });
                    e
                }
            },
            Err(e) => {
                transcript.push(TranscriptEntry { role: Role::Judger, turn: 1, response: None, observation: None, error: Some(e.to_string()) });
                JudgerError::Backend(e)
            }
        };
        if retries_left == 0 {
            return Err(format!("judger: retries exhausted: {err}"));
        }
        retries_left -= 1;
        telemetry.retries += 1;
    }
}

/// The statement that replaced the tag, found by stripping the lines shared
/// with the marked code from both ends.
pub fn inserted_statement(marked: &str, final_code: &str) -> Result<LoggingStatement, OrchestratorError> {
    let a: Vec<&str> = marked.lines().collect();
    let b: Vec<&str> = final_code.lines().collect();
    let same = |x: &str, y: &str| x.trim() == y.trim();
    let mut pre = 0;
    while pre < a.len() && pre < b.len() && same(a[pre], b[pre]) {
        pre += 1;
    }
    let mut suf = 0;
    while suf < a.len() - pre && suf < b.len() - pre && same(a[a.len() - 1 - suf], b[b.len() - 1 - suf]) {
        suf += 1;
    }
    let middle = b[pre..b.len() - suf].join("\n");
    if middle.contains(NEED_LOGGING_TAG) {
        return Err(OrchestratorError::NoLogStatement("the tag was not replaced".into()));
    }
    parse_log_statement(&middle)
        .or_else(|| b[pre..b.len() - suf].iter().find_map(|l| parse_log_statement(l)))
        .ok_or_else(|| OrchestratorError::NoLogStatement(if middle.trim().is_empty() { "nothing was inserted".into() } else { middle.trim().to_string() }))
}

/// Runs the full pipeline for one method. Failures after retries are
/// reported in the result, never raised.
pub fn run_pipeline(
    record: &MethodRecord,
    resources: &Resources,
    judger: &dyn ModelBackend,
    agent: &dyn ModelBackend,
    config: &OrchestratorConfig,
) -> PipelineResult {
    run_pipeline_traced(record, resources, judger, agent, config).0
}

pub fn run_pipeline_traced(
    record: &MethodRecord,
    resources: &Resources,
    judger: &dyn ModelBackend,
    agent: &dyn ModelBackend,
    config: &OrchestratorConfig,
) -> (PipelineResult, Vec<TranscriptEntry>) {
    let budget = Budget::new(config);
    let mut transcript = Vec::new();
    let mut result = PipelineResult {
        method_id: record.id.clone(),
        decision: None,
        located_line: None,
        generated_statement: None,
        final_code: None,
        failure: None,
        telemetry: Telemetry::default(),
        warnings: Vec::new(),
    };
    stages(record, resources, judger, agent, config, &budget, &mut result, &mut transcript);
    if config.record_timings {
        result.telemetry.wall_time_ms = Some(budget.start.elapsed().as_millis() as u64);
    }
    (result, transcript)
}

#[allow(clippy::too_many_arguments)]
fn stages(
    record: &MethodRecord,
    resources: &Resources,
    judger: &dyn ModelBackend,
    agent: &dyn ModelBackend,
    config: &OrchestratorConfig,
    budget: &Budget,
    result: &mut PipelineResult,
    transcript: &mut Vec<TranscriptEntry>,
) {
    let fail = |result: &mut PipelineResult, stage: &str, msg: String| {
        result.failure = Some(format!("{stage}: {msg}"));
    };
    if let Err(e) = config.validate() {
        return fail(result, "config", e);
    }
    let prompt = match judge_prompt(record, resources) {
        Ok(p) => p,
        Err(e) => return fail(result, "judger", e),
    };
    let decision = match judge(&prompt, judger, config, budget, &mut result.telemetry, transcript) {
        Ok(d) => d,
        Err(e) => {
            result.failure = Some(e);
            return;
        }
    };
    result.decision = Some(decision.label);
    if decision.label == Label::NoLog {
        return;
    }

    let cases = resources.cases.as_ref();
    let locator_ctx = ToolContext { source: &record.source, tag_line: None, cases, k: config.retrieval_k };
    let located = match run_loop(Role::Locator, &build_locator_prompt(&record.source), agent, &locator_ctx, config, budget, &mut result.telemetry, transcript) {
        Ok(o) => o,
        Err(e) => return fail(result, "locator", e.to_string()),
    };
    let tag = match locate_need_logging_tag(&located.final_code) {
        Ok(t) => t,
        Err(e) => return fail(result, "locator", e.to_string()),
    };
    result.warnings.extend(tag.warnings.iter().cloned());
    result.located_line = Some(tag.line);
    let marked = keep_first_tag(&tag.code, tag.line);

    let carried: Vec<String> = located.carried.iter().map(CarriedOutput::render).collect();
    let gen_prompt = match build_generator_prompt(&marked, &carried) {
        Ok(p) => p,
        Err(e) => return fail(result, "generator", e.to_string()),
    };
    let gen_ctx = ToolContext { source: &record.source, tag_line: Some(tag.line), cases, k: config.retrieval_k };
    let generated = match run_loop(Role::Generator, &gen_prompt, agent, &gen_ctx, config, budget, &mut result.telemetry, transcript) {
        Ok(o) => o,
        Err(e) => return fail(result, "generator", e.to_string()),
    };
    match inserted_statement(&marked, &generated.final_code) {
        Ok(mut s) => {
            s.line = tag.line;
            result.generated_statement = Some(s);
            result.final_code = Some(generated.final_code);
        }
        Err(e) => {
            result.final_code = Some(generated.final_code);
            fail(result, "generator", e.to_string())
        }
    }
}

/// Drops every tag line other than `line`.
fn keep_first_tag(code: &str, line: usize) -> String {
    code.lines().enumerate().filter(|(i, l)| i + 1 == line || !l.contains(NEED_LOGGING_TAG)).map(|(_, l)| l).collect::<Vec<_>>().join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::judger::{FailingBackend, ScriptedBackend};
    use crate::retrieval::Bm25Params;

    const SRC: &str = "void f(int p) {\n  int a = p;\n  use(a);\n}";

    fn record() -> MethodRecord {
        MethodRecord::from_source("m1", "F.java", SRC).unwrap()
    }

    fn resources() -> Resources {
        let pair = RetrievalPair::new("c1", "void g(int q) { int b = q; }", "void g(int q) { int b = q; log.info(\"b {}\", b); }").unwrap();
        Resources { cases: Some(Bm25Index::build(vec![pair], Bm25Params::default()).unwrap()), examples: None }
    }

    fn tool(name: &str, line: usize) -> String {
        format!(r#"{{"thoughts":"t","command":{{"tool":"{name}","args":{{"line":{line}}}}}}}"#)
    }

    const LOCATED: &str = "```java\nvoid f(int p) {\n  int a = p;\n  <<need_logging>>\n  use(a);\n}\n```";
    const FINAL: &str = "```java\nvoid f(int p) {\n  int a = p;\n  log.debug(\"a is {}\", a);\n  use(a);\n}\n```";

    #[test]
    fn two_tool_calls_then_final() {
        let agent = ScriptedBackend::new([tool("variable_extractor", 3), tool("backward_slicing", 3), LOCATED.to_string()]);
        let mut t = Telemetry::default();
        let ctx = ToolContext { source: SRC, tag_line: None, cases: None, k: 1 };
        let out = run_agent_loop(Role::Locator, "p", &agent, &ctx, &OrchestratorConfig::default(), &mut t).unwrap();
        assert_eq!(t.tool_calls, 2);
        assert_eq!(out.carried.len(), 2);
        assert!(out.final_code.contains(NEED_LOGGING_TAG));
        let prompts = agent.prompts();
        assert!(prompts[2].contains("### Observation 2"));
    }

    #[test]
    fn never_finalizing_hits_turn_budget() {
        let agent = ScriptedBackend::new(vec![tool("variable_extractor", 2); 10]);
        let cfg = OrchestratorConfig { max_turns: 3, ..Default::default() };
        let ctx = ToolContext { source: SRC, tag_line: None, cases: None, k: 1 };
        let mut t = Telemetry::default();
        let err = run_agent_loop(Role::Locator, "p", &agent, &ctx, &cfg, &mut t).unwrap_err();
        assert_eq!(err, OrchestratorError::TurnBudgetExceeded { role: Role::Locator, turns: 3 });
        assert_eq!(agent.calls(), 3);
    }

    #[test]
    fn transient_failure_recovers() {
        let agent = FailingBackend::transient(1, ScriptedBackend::new([LOCATED]));
        let cfg = OrchestratorConfig { retry_limit: 1, ..Default::default() };
        let ctx = ToolContext { source: SRC, tag_line: None, cases: None, k: 1 };
        let mut t = Telemetry::default();
        assert!(run_agent_loop(Role::Locator, "p", &agent, &ctx, &cfg, &mut t).is_ok());
        assert_eq!(t.retries, 1);
    }

    #[test]
    fn malformed_reply_consumes_a_retry() {
        let agent = ScriptedBackend::new(["hmm", LOCATED]);
        let ctx = ToolContext { source: SRC, tag_line: None, cases: None, k: 1 };
        let mut t = Telemetry::default();
        run_agent_loop(Role::Locator, "p", &agent, &ctx, &OrchestratorConfig::default(), &mut t).unwrap();
        assert_eq!(t.retries, 1);
        assert!(agent.prompts()[1].contains(PARSE_HINT));
    }

    #[test]
    fn no_log_short_circuits() {
        let judge = ScriptedBackend::new(["NO_LOG"]);
        let agent = ScriptedBackend::new(Vec::<String>::new());
        let r = run_pipeline(&record(), &resources(), &judge, &agent, &OrchestratorConfig::default());
        assert_eq!(r.decision, Some(Label::NoLog));
        assert!(r.is_ok() && r.located_line.is_none() && r.final_code.is_none());
        assert_eq!((r.telemetry.tool_calls, r.telemetry.agent_calls), (0, 0));
        assert_eq!(agent.calls(), 0);
    }

    #[test]
    fn full_pipeline_with_carry_over() {
        let judge = ScriptedBackend::new(["LOG"]);
        let agent = ScriptedBackend::new([
            r#"{"thoughts":"find similar","command":{"tool":"similar_case_retrieval","args":{}}}"#.to_string(),
            tool("variable_extractor", 3),
            LOCATED.to_string(),
            FINAL.to_string(),
        ]);
        let r = run_pipeline(&record(), &resources(), &judge, &agent, &OrchestratorConfig::default());
        assert!(r.is_ok(), "{:?}", r.failure);
        assert_eq!(r.located_line, Some(3));
        let s = r.generated_statement.unwrap();
        assert_eq!((s.level, s.template.as_str(), s.variables.as_slice(), s.line), (crate::analysis::Level::Debug, "a is {}", &["a".to_string()][..], 3));
        assert_eq!(r.final_code.unwrap(), extract_code_block(FINAL).unwrap());
        assert_eq!(r.telemetry.tool_calls, 2);
        let gen_prompt = &agent.prompts()[3];
        assert_eq!(gen_prompt.matches("=== CASE c1 ===").count(), 1);
        assert_eq!(gen_prompt.matches("#### variable_extractor").count(), 1);
    }

    #[test]
    fn permanent_agent_failure_is_controlled() {
        let judge = ScriptedBackend::new(["LOG"]);
        let agent = FailingBackend::always();
        let r = run_pipeline(&record(), &resources(), &judge, &agent, &OrchestratorConfig::default());
        assert!(r.failure.as_deref().unwrap().starts_with("locator: retries exhausted"));
        assert_eq!(r.telemetry.retries, 2);
        assert_eq!(agent.calls(), 3);
    }

    #[test]
    fn generator_prompt_requires_tag() {
        assert_eq!(build_generator_prompt("void f() {}", &[]), Err(OrchestratorError::MissingTag));
        let p = build_generator_prompt("a\n<<need_logging>>", &[]).unwrap();
        assert!(p.contains("(no tool results yet)"));
    }

    #[test]
    fn inserted_statement_diff() {
        let marked = "a();\n<<need_logging>>\nb();";
        let s = inserted_statement(marked, "a();\nLOG.warn(\"x {}\", y);\nb();").unwrap();
        assert_eq!(s.template, "x {}");
        assert!(inserted_statement(marked, "a();\nb();").is_err());
        assert!(inserted_statement(marked, marked).is_err());
    }
}
