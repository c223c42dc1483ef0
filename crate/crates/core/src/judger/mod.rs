//! Whether-to-log gate: one-shot prompt construction and label parsing.

pub mod backend;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use backend::{BackendError, FailingBackend, ModelBackend, RemoteBackend, RemoteConfig, ScriptedBackend};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "LOG")]
    Log,
    #[serde(rename = "NO_LOG")]
    NoLog,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Log => "LOG",
            Label::NoLog => "NO_LOG",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = JudgerError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "LOG" => Ok(Label::Log),
            "NO_LOG" => Ok(Label::NoLog),
            _ => Err(JudgerError::UnparseableDecision(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgeDecision {
    pub label: Label,
    pub raw_response: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JudgerError {
    #[error("no LOG or NO_LOG token in response: {0:?}")]
    UnparseableDecision(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

pub const JUDGER_INSTRUCTION: &str = "\
Decide whether the target Java method needs one more logging statement.
Answer LOG if a logging statement should be added, or NO_LOG if the method is fine as it is.";

pub fn build_judger_prompt(target: &str, example_code: &str, example_label: Label) -> String {
    format!(
        "### Instruction\n{JUDGER_INSTRUCTION}\n\n\
         ### Example\n```java\n{example_code}\n```\nAnswer: {example_label}\n\n\
         ### Target\n```java\n{target}\n```\n\n\
         Reply with exactly one label, LOG or NO_LOG.\nAnswer:"
    )
}

fn standalone_positions(text: &str, word: &str) -> Vec<usize> {
    let is_word = |c: char| c.is_alphanumeric() || c == '_';
    text.match_indices(word)
        .filter(|(i, _)| {
            let before = text[..*i].chars().next_back();
            let after = text[i + word.len()..].chars().next();
            !before.is_some_and(is_word) && !after.is_some_and(is_word)
        })
        .map(|(i, _)| i)
        .collect()
}

/// `NO_LOG` wins whenever it occurs as a standalone token; otherwise the last
/// standalone `LOG`.
pub fn parse_judge_label(response: &str) -> Result<JudgeDecision, JudgerError> {
    let label = if !standalone_positions(response, "NO_LOG").is_empty() {
        Label::NoLog
    } else if !standalone_positions(response, "LOG").is_empty() {
        Label::Log
    } else {
        return Err(JudgerError::UnparseableDecision(response.to_string()));
    };
    Ok(JudgeDecision { label, raw_response: response.to_string() })
}
