//! Whether/where/what evaluation and the gated end-to-end protocol.

pub mod text;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;
use std::thread;
use std::time::Duration;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{BlockMap, Level, LoggingStatement};
use crate::corpus::GoldRecord;
use crate::judger::{BackendError, Label, ModelBackend};
use crate::orchestrator::PipelineResult;

pub use text::{bleu, bleu_tokens, lcs_len, rouge, rouge_tokens, template_tokens, RougeVariant};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("empty input")]
    EmptyInput,
    #[error("length mismatch: {0} predictions vs {1} references")]
    LengthMismatch(usize, usize),
    #[error("line {line} is outside 1..={max}")]
    LineOutOfRange { line: usize, max: usize },
    #[error("prediction and gold ids differ: {0}")]
    IdMismatch(String),
    #[error("unparseable judge score: {0:?}")]
    UnparseableScore(String),
    #[error("no judge backends configured")]
    NoJudges,
    #[error("judge backend failed: {0}")]
    Backend(#[from] BackendError),
    #[error("gold source for {id}: {message}")]
    BadGold { id: String, message: String },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn new(tp: usize, fp: usize, tn: usize, fn_: usize) -> Self {
        ConfusionCounts { tp, fp, tn, fn_ }
    }

    pub fn add(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhetherMetrics {
    pub ba: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Ratios whose denominator was zero and were reported as 0.
    pub undefined: Vec<String>,
}

fn ratio(num: usize, den: usize, name: &str, undefined: &mut Vec<String>) -> f64 {
    if den == 0 {
        undefined.push(name.to_string());
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn confusion_metrics(c: &ConfusionCounts) -> WhetherMetrics {
    let mut undefined = Vec::new();
    let precision = ratio(c.tp, c.tp + c.fp, "precision", &mut undefined);
    let recall = ratio(c.tp, c.tp + c.fn_, "recall", &mut undefined);
    let specificity = ratio(c.tn, c.tn + c.fp, "specificity", &mut undefined);
    let f1 = if precision + recall == 0.0 {
        undefined.push("f1".into());
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    WhetherMetrics { ba: 0.5 * recall + 0.5 * specificity, precision, recall, f1, undefined }
}

/// 1 when the lines are at most one apart and share the innermost block.
pub fn position_accuracy(pred_line: usize, true_line: usize, blocks: &BlockMap) -> Result<u8, MetricsError> {
    let max = blocks.line_count();
    let get = |l: usize| blocks.get(l).ok_or(MetricsError::LineOutOfRange { line: l, max });
    let (p, t) = (get(pred_line)?, get(true_line)?);
    Ok((pred_line.abs_diff(true_line) <= 1 && p == t) as u8)
}

/// Per-item ordinal closeness `1 - Dis / MaxDis(actual)`.
pub fn ordinal_score(pred: Level, actual: Level) -> f64 {
    1.0 - pred.distance(actual) as f64 / actual.max_distance() as f64
}

/// (level accuracy, average ordinal distance score).
pub fn level_metrics(preds: &[Level], truths: &[Level]) -> Result<(f64, f64), MetricsError> {
    if preds.len() != truths.len() {
        return Err(MetricsError::LengthMismatch(preds.len(), truths.len()));
    }
    if preds.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let n = preds.len() as f64;
    let la = preds.iter().zip(truths).filter(|(p, t)| p == t).count() as f64 / n;
    let aod = preds.iter().zip(truths).map(|(p, t)| ordinal_score(*p, *t)).sum::<f64>() / n;
    Ok((la, aod))
}

/// Whitespace-free variable expressions with set semantics.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableSet {
    pub names: BTreeSet<String>,
}

impl VariableSet {
    pub fn from_exprs<I, S>(exprs: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let names = exprs.into_iter().map(|e| e.as_ref().split_whitespace().collect::<String>()).filter(|e| !e.is_empty()).collect();
        VariableSet { names }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariableScore {
    pub exact: u8,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn variable_metrics(pred: &VariableSet, gold: &VariableSet) -> VariableScore {
    let exact = (pred.names == gold.names) as u8;
    if pred.names.is_empty() && gold.names.is_empty() {
        return VariableScore { exact, precision: 1.0, recall: 1.0, f1: 1.0 };
    }
    let inter = pred.names.intersection(&gold.names).count();
    let precision = if pred.names.is_empty() { 0.0 } else { inter as f64 / pred.names.len() as f64 };
    let recall = if gold.names.is_empty() { 0.0 } else { inter as f64 / gold.names.len() as f64 };
    let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
    VariableScore { exact, precision, recall, f1 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhatMetrics {
    pub la: f64,
    pub aod: f64,
    pub pmr: f64,
    pub variable_f1: f64,
    pub bleu_1: f64,
    pub bleu_4: f64,
    pub rouge_1: f64,
    pub rouge_l: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleCounts {
    pub whether: usize,
    #[serde(rename = "where")]
    pub where_: usize,
    pub what: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub confusion: ConfusionCounts,
    pub whether: WhetherMetrics,
    /// Position accuracy; absent when no method reached the where stage.
    #[serde(rename = "where")]
    pub where_: Option<f64>,
    pub what: Option<WhatMetrics>,
    pub counts: SampleCounts,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub judge: Option<f64>,
}

/// Per-statement what-to-log scores; a missing prediction scores 0 on all.
fn what_scores(pred: Option<&LoggingStatement>, gold: &LoggingStatement) -> [f64; 8] {
    let Some(p) = pred else { return [0.0; 8] };
    let v = variable_metrics(&VariableSet::from_exprs(&p.variables), &VariableSet::from_exprs(&gold.variables));
    let (c, r) = (template_tokens(&p.template), template_tokens(&gold.template));
    [
        (p.level == gold.level) as u8 as f64,
        ordinal_score(p.level, gold.level),
        v.exact as f64,
        v.f1,
        bleu_tokens(&c, &r, 1),
        bleu_tokens(&c, &r, 4),
        rouge_tokens(&c, &r, RougeVariant::Rouge1),
        rouge_tokens(&c, &r, RougeVariant::RougeL),
    ]
}

struct Gated<'a> {
    confusion: ConfusionCounts,
    where_n: usize,
    /// (gold, prediction) pairs passing both the whether and where gates.
    what: Vec<(&'a GoldRecord, &'a PipelineResult)>,
}

fn gate<'a>(results: &'a [PipelineResult], gold: &'a [GoldRecord]) -> Result<Gated<'a>, MetricsError> {
    let preds: BTreeMap<&str, &PipelineResult> = results.iter().map(|r| (r.method_id.as_str(), r)).collect();
    let golds: BTreeMap<&str, &GoldRecord> = gold.iter().map(|g| (g.method_id.as_str(), g)).collect();
    if preds.len() != results.len() || golds.len() != gold.len() {
        return Err(MetricsError::IdMismatch("duplicate method ids".into()));
    }
    if let Some(id) = preds.keys().find(|k| !golds.contains_key(*k)).or_else(|| golds.keys().find(|k| !preds.contains_key(*k))) {
        return Err(MetricsError::IdMismatch(format!("`{id}` is not present on both sides")));
    }
    if golds.is_empty() {
        return Err(MetricsError::EmptyInput);
    }

    let mut out = Gated { confusion: ConfusionCounts::default(), where_n: 0, what: Vec::new() };
    for (id, g) in &golds {
        let p = preds[id];
        let predicted_log = p.decision == Some(Label::Log);
        let actual_log = g.label == Label::Log;
        out.confusion.add(predicted_log, actual_log);
        if !(predicted_log && actual_log) {
            continue;
        }
        let (Some(gl), Some(_)) = (g.line, g.statement.as_ref()) else {
            return Err(MetricsError::BadGold { id: id.to_string(), message: "LOG gold without line or statement".into() });
        };
        out.where_n += 1;
        let blocks = BlockMap::of_source(&g.source).map_err(|e| MetricsError::BadGold { id: id.to_string(), message: e.to_string() })?;
        let hit = match p.located_line {
            Some(pl) => position_accuracy(pl, gl, &blocks).unwrap_or(0) == 1,
            None => false,
        };
        if hit {
            out.what.push((*g, p));
        }
    }
    Ok(out)
}

/// Whether over all methods, where over gold-LOG methods predicted LOG, what
/// over those whose position is also correct. A missing decision counts as
/// NO_LOG.
pub fn evaluate_end_to_end(results: &[PipelineResult], gold: &[GoldRecord]) -> Result<MetricReport, MetricsError> {
    let gated = gate(results, gold)?;
    let confusion = gated.confusion;
    let where_n = gated.where_n;
    let pa_hits = gated.what.len();
    let what: Vec<[f64; 8]> =
        gated.what.iter().map(|(g, p)| what_scores(p.generated_statement.as_ref(), g.statement.as_ref().expect("checked in gate"))).collect();
    let what_metrics = (!what.is_empty()).then(|| {
        let n = what.len() as f64;
        let mean = |k: usize| what.iter().map(|s| s[k]).sum::<f64>() / n;
        WhatMetrics { la: mean(0), aod: mean(1), pmr: mean(2), variable_f1: mean(3), bleu_1: mean(4), bleu_4: mean(5), rouge_1: mean(6), rouge_l: mean(7) }
    });
    Ok(MetricReport {
        whether: confusion_metrics(&confusion),
        confusion,
        where_: (where_n > 0).then(|| pa_hits as f64 / where_n as f64),
        what: what_metrics,
        counts: SampleCounts { whether: confusion.total(), where_: where_n, what: what.len() },
        judge: None,
    })
}

fn score_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)score\s*[:=]\s*(-?\d+)").unwrap())
}

fn int_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?:^|[^\w.])(-?\d+)(?:$|[^\w.])").unwrap())
}

/// Last `score: N`, else the last standalone integer; must lie in 0..=3.
pub fn parse_judge_score(response: &str) -> Result<u8, MetricsError> {
    let bad = || MetricsError::UnparseableScore(response.to_string());
    let caps = score_re().captures_iter(response).last().or_else(|| int_re().captures_iter(response).last()).ok_or_else(bad)?;
    let n: i64 = caps[1].parse().map_err(|_| bad())?;
    u8::try_from(n).ok().filter(|n| *n <= 3).ok_or_else(bad)
}

pub fn build_judge_prompt(rubric: &str, context: &str, generated: &str, gold: &str) -> String {
    format!(
        "{rubric}\n\n### Method\n```java\n{context}\n```\n\n### Reference logging statement\n{gold}\n\n\
         ### Generated logging statement\n{generated}\n\nReply with `score: N` where N is an integer from 0 to 3."
    )
}

/// Mean of the integer scores returned by the judge backends, queried
/// concurrently.
pub fn llm_judge_score(judges: &[&dyn ModelBackend], context: &str, generated: &str, gold: &str, rubric: &str, timeout: Duration) -> Result<f64, MetricsError> {
    if judges.is_empty() {
        return Err(MetricsError::NoJudges);
    }
    let prompt = build_judge_prompt(rubric, context, generated, gold);
    let replies: Vec<Result<String, BackendError>> = thread::scope(|s| {
        let handles: Vec<_> = judges.iter().map(|j| s.spawn(|| j.complete(&prompt, 0.0, timeout))).collect();
        handles.into_iter().map(|h| h.join().expect("judge thread panicked")).collect()
    });
    let mut total = 0u32;
    for r in replies {
        total += parse_judge_score(&r?)? as u32;
    }
    Ok(total as f64 / judges.len() as f64)
}

/// Mean judge score over the methods that pass the whether and where gates;
/// `None` when none do. A missing statement is shown to the judges as
/// "(none)".
pub fn judge_gated(
    results: &[PipelineResult],
    gold: &[GoldRecord],
    judges: &[&dyn ModelBackend],
    rubric: &str,
    timeout: Duration,
) -> Result<Option<f64>, MetricsError> {
    let gated = gate(results, gold)?;
    if gated.what.is_empty() {
        return Ok(None);
    }
    let mut total = 0.0;
    for (g, p) in &gated.what {
        let generated = p.generated_statement.as_ref().map_or("(none)", |s| s.raw.as_str());
        let reference = g.statement.as_ref().map_or("", |s| s.raw.as_str());
        total += llm_judge_score(judges, &g.source, generated, reference, rubric, timeout)?;
    }
    Ok(Some(total / gated.what.len() as f64))
}
