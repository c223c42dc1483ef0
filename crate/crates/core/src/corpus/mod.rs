//! Method extraction, whether-to-log sample construction, file-grouped
//! splitting and instruction-dataset export.

mod format;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use walkdir::WalkDir;

use crate::analysis::{find_log_statements, parse_method, parser, AnalysisError, LoggingStatement};
use crate::judger::{build_judger_prompt, Label};
use crate::retrieval::{Bm25Index, Indexable, RetrievalError};

pub use format::wrap_in_class_a;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error(transparent)]
    Parse(#[from] AnalysisError),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("invalid split ratios: {0}")]
    InvalidRatios(String),
    #[error("retrieval index has no documents")]
    EmptyIndex,
    #[error("i/o failure: {0}")]
    Io(#[from] io::Error),
    #[error("{path}:{line}: {message}")]
    Json { path: String, line: usize, message: String },
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodRecord {
    pub id: String,
    pub source: String,
    pub file: String,
    pub start_line: usize,
    pub end_line: usize,
    /// Lines are relative to `source` (first line is 1).
    pub log_statements: Vec<LoggingStatement>,
    pub has_log: bool,
}

impl MethodRecord {
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.start_line > self.end_line {
            return Err(format!("{}: start_line after end_line", self.id));
        }
        for l in &self.log_statements {
            let abs = self.start_line + l.line.saturating_sub(1);
            if l.line == 0 || abs > self.end_line {
                return Err(format!("{}: log at relative line {} lies outside the method", self.id, l.line));
            }
        }
        if self.has_log == self.log_statements.is_empty() {
            return Err(format!("{}: has_log disagrees with log_statements", self.id));
        }
        Ok(())
    }

    /// Record for a bare piece of method text, e.g. a sample target.
    pub fn from_source(id: impl Into<String>, file: impl Into<String>, source: impl Into<String>) -> Result<Self, AnalysisError> {
        let source = source.into();
        let log_statements = method_logs(&source)?;
        Ok(MethodRecord {
            id: id.into(),
            file: file.into(),
            start_line: 1,
            end_line: source.lines().count().max(1),
            has_log: !log_statements.is_empty(),
            log_statements,
            source,
        })
    }
}

fn method_logs(source: &str) -> Result<Vec<LoggingStatement>, AnalysisError> {
    let m = parse_method(source)?;
    Ok(find_log_statements(&m.tree, &m.method).into_iter().map(|l| l.statement).collect())
}

#[derive(Debug, Clone, Default)]
pub struct Extraction {
    pub records: Vec<MethodRecord>,
    pub warnings: Vec<String>,
}

/// One record per member method with a body, constructors included.
pub fn extract_methods(source: &str, path: &str) -> Result<Extraction, CorpusError> {
    let tree = parser::parse_source(source)?;
    let lines: Vec<&str> = source.lines().collect();
    let mut records = Vec::new();
    for (_, m) in tree.methods() {
        if m.body.is_none() {
            continue;
        }
        let text = lines[m.start_line - 1..m.end_line.min(lines.len())].join("\n");
        let log_statements: Vec<LoggingStatement> = find_log_statements(&tree, m)
            .into_iter()
            .map(|l| {
                let mut s = l.statement;
                s.line = l.start_line - m.start_line + 1;
                s
            })
            .collect();
        records.push(MethodRecord {
            id: format!("{path}::{}@{}", m.name, m.start_line),
            source: text,
            file: path.to_string(),
            start_line: m.start_line,
            end_line: m.end_line,
            has_log: !log_statements.is_empty(),
            log_statements,
        });
    }
    let warnings = tree.warnings.iter().map(|w| format!("{path}: {w}")).collect();
    Ok(Extraction { records, warnings })
}

/// Extracts every `*.java` file under `root` in parallel; files that fail to
/// parse are reported as warnings. Paths in ids are relative to `root`.
pub fn extract_directory(root: &Path) -> Result<Extraction, CorpusError> {
    let mut files: Vec<PathBuf> = WalkDir::new(root)
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file() && e.path().extension().is_some_and(|x| x == "java"))
        .map(|e| e.into_path())
        .collect();
    files.sort();
    let results: Vec<Result<Extraction, String>> = files
        .par_iter()
        .map(|p| {
            let rel = p.strip_prefix(root).unwrap_or(p).to_string_lossy().replace('\\', "/");
            let text = fs::read_to_string(p).map_err(|e| format!("{rel}: {e}"))?;
            extract_methods(&text, &rel).map_err(|e| format!("{rel}: skipped: {e}"))
        })
        .collect();
    let mut out = Extraction::default();
    for r in results {
        match r {
            Ok(e) => {
                out.records.extend(e.records);
                out.warnings.extend(e.warnings);
            }
            Err(w) => out.warnings.push(w),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    PositiveRemoval { removed_line: usize, removed: LoggingStatement },
    NegativeOriginal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgerSample {
    pub id: String,
    pub target_code: String,
    pub label: Label,
    pub provenance: Provenance,
    pub origin_id: String,
}

impl Indexable for JudgerSample {
    fn doc_id(&self) -> &str {
        &self.id
    }
    fn index_text(&self) -> &str {
        &self.target_code
    }
}

fn line_start(src: &str, byte: usize) -> usize {
    src[..byte].rfind('\n').map_or(0, |i| i + 1)
}

fn line_end_incl(src: &str, byte: usize) -> usize {
    src[byte..].find('\n').map_or(src.len(), |i| byte + i + 1)
}

/// Removes one logging statement. Whole lines go when they hold nothing
/// else; a statement that is the entire body of an unbraced `if`/loop
/// leaves its `;` behind so the construct stays valid.
fn remove_span(src: &str, start: usize, end: usize, sole_body: bool) -> String {
    if sole_body {
        return format!("{}{}", &src[..start], &src[end - 1..]);
    }
    let (ls, le) = (line_start(src, start), line_end_incl(src, end));
    let alone = src[ls..start].trim().is_empty() && src[end..le].trim().is_empty();
    if alone {
        let mut out = String::with_capacity(src.len());
        out.push_str(&src[..ls]);
        out.push_str(&src[le..]);
        if le == src.len() && out.ends_with('\n') && !src.ends_with('\n') {
            out.pop();
        }
        out
    } else {
        format!("{}{}", &src[..start], &src[end..])
    }
}

/// n positives (one per removable log) plus the original as a negative.
pub fn make_judger_samples(record: &MethodRecord) -> Vec<JudgerSample> {
    let mut out = Vec::new();
    if let Ok(m) = parse_method(&record.source) {
        let logs = find_log_statements(&m.tree, &m.method);
        for l in &logs {
            let target = remove_span(&record.source, l.start_byte, l.end_byte, l.sole_body);
            let reparsed = method_logs(&target);
            match reparsed {
                Ok(left) if left.len() + 1 == logs.len() => out.push(JudgerSample {
                    id: format!("{}#pos@{}", record.id, l.start_line),
                    target_code: target,
                    label: Label::Log,
                    provenance: Provenance::PositiveRemoval { removed_line: l.start_line, removed: l.statement.clone() },
                    origin_id: record.id.clone(),
                }),
                _ => log::warn!("{}: removing the log at line {} breaks the method; skipped", record.id, l.start_line),
            }
        }
    }
    out.push(JudgerSample {
        id: format!("{}#neg", record.id),
        target_code: record.source.clone(),
        label: Label::NoLog,
        provenance: Provenance::NegativeOriginal,
        origin_id: record.id.clone(),
    });
    out
}

/// Canonical formatting inside `class A`; spans refer to the new text.
pub fn normalize_and_wrap(record: &MethodRecord) -> Result<MethodRecord, CorpusError> {
    parse_method(&record.source)?;
    let source = wrap_in_class_a(&record.source)?;
    let log_statements = method_logs(&source)?;
    Ok(MethodRecord {
        id: record.id.clone(),
        file: record.file.clone(),
        start_line: 1,
        end_line: source.lines().count(),
        has_log: !log_statements.is_empty(),
        log_statements,
        source,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSplit {
    pub train: Vec<String>,
    pub valid: Vec<String>,
    pub test: Vec<String>,
    pub seed: u64,
    pub ratios: [f64; 3],
}

impl CorpusSplit {
    pub fn partition_of(&self, id: &str) -> Option<usize> {
        [&self.train, &self.valid, &self.test].iter().position(|p| p.iter().any(|x| x == id))
    }
}

/// Weight of the positive-count deviation relative to the size deviation.
const STRATA_WEIGHT: f64 = 4.0;

/// Greedy file-level assignment: largest files first (seeded order among
/// equal sizes), each going to the partition that minimises the squared
/// deviation from target method and positive counts.
pub fn split_corpus(records: &[MethodRecord], ratios: [f64; 3], seed: u64) -> Result<CorpusSplit, CorpusError> {
    if records.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    if ratios.iter().any(|r| !r.is_finite() || *r < 0.0) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(CorpusError::InvalidRatios(format!("{ratios:?} must be non-negative and sum to 1")));
    }
    let mut files: BTreeMap<&str, (Vec<&str>, usize)> = BTreeMap::new();
    for r in records {
        let e = files.entry(r.file.as_str()).or_default();
        e.0.push(&r.id);
        e.1 += r.has_log as usize;
    }
    let mut groups: Vec<(&str, Vec<&str>, usize)> = files.into_iter().map(|(f, (ids, pos))| (f, ids, pos)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    groups.shuffle(&mut rng);
    groups.sort_by_key(|g| std::cmp::Reverse(g.1.len()));

    let total = records.len() as f64;
    let positives = records.iter().filter(|r| r.has_log).count() as f64;
    let target: Vec<f64> = ratios.iter().map(|r| r * total).collect();
    let target_pos: Vec<f64> = ratios.iter().map(|r| r * positives).collect();
    let mut size = [0usize; 3];
    let mut pos = [0usize; 3];
    let mut parts: [Vec<String>; 3] = Default::default();
    let cost = |size: &[usize; 3], pos: &[usize; 3]| -> f64 {
        (0..3)
            .map(|p| {
                let ds = size[p] as f64 - target[p];
                let dp = pos[p] as f64 - target_pos[p];
                ds * ds + STRATA_WEIGHT * dp * dp
            })
            .sum()
    };
    for (_, ids, npos) in groups {
        let mut best: Option<(f64, usize)> = None;
        for p in (0..3).filter(|&p| ratios[p] > 0.0) {
            let (mut s, mut q) = (size, pos);
            s[p] += ids.len();
            q[p] += npos;
            let c = cost(&s, &q);
            if best.is_none_or(|(bc, _)| c < bc) {
                best = Some((c, p));
            }
        }
        let p = best.expect("at least one ratio is positive").1;
        size[p] += ids.len();
        pos[p] += npos;
        parts[p].extend(ids.into_iter().map(str::to_string));
    }
    for p in parts.iter_mut() {
        p.sort();
    }
    let [train, valid, test] = parts;
    Ok(CorpusSplit { train, valid, test, seed, ratios })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructionRecord {
    pub instruction: String,
    pub example_code: String,
    pub example_label: Label,
    pub target_code: String,
    pub label: Label,
}

/// One line per sample, using the top BM25 hit from `index` as the one-shot
/// example.
pub fn export_instruction_dataset(samples: &[JudgerSample], index: &Bm25Index<JudgerSample>, sink: &mut dyn Write) -> Result<usize, CorpusError> {
    if index.doc_count() == 0 {
        return Err(CorpusError::EmptyIndex);
    }
    let mut n = 0;
    for s in samples {
        let hits = index.retrieve(&s.target_code, 1)?;
        let (ex, _) = hits[0];
        let rec = InstructionRecord {
            instruction: build_judger_prompt(&s.target_code, &ex.target_code, ex.label),
            example_code: ex.target_code.clone(),
            example_label: ex.label,
            target_code: s.target_code.clone(),
            label: s.label,
        };
        serde_json::to_writer(&mut *sink, &rec).map_err(io::Error::from)?;
        sink.write_all(b"\n")?;
        n += 1;
    }
    sink.flush()?;
    Ok(n)
}

/// Gold whether/where/what annotation for one evaluation target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldRecord {
    pub method_id: String,
    pub label: Label,
    /// Insertion line of the removed statement within `source`.
    #[serde(default)]
    pub line: Option<usize>,
    #[serde(default)]
    pub statement: Option<LoggingStatement>,
    /// Target text the line refers to.
    pub source: String,
}

impl GoldRecord {
    pub fn from_sample(s: &JudgerSample) -> Self {
        let (line, statement) = match &s.provenance {
            Provenance::PositiveRemoval { removed_line, removed } => (Some(*removed_line), Some(removed.clone())),
            Provenance::NegativeOriginal => (None, None),
        };
        GoldRecord { method_id: s.id.clone(), label: s.label, line, statement, source: s.target_code.clone() }
    }
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), CorpusError> {
    let mut f = io::BufWriter::new(fs::File::create(path)?);
    for it in items {
        serde_json::to_writer(&mut f, it).map_err(io::Error::from)?;
        f.write_all(b"\n")?;
    }
    f.flush()?;
    Ok(())
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CorpusError> {
    let f = BufReader::new(fs::File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in f.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| CorpusError::Json { path: path.display().to_string(), line: i + 1, message: e.to_string() })?);
    }
    Ok(out)
}

/// Distinct files per partition, for leakage checks.
pub fn files_by_partition(split: &CorpusSplit, records: &[MethodRecord]) -> [BTreeSet<String>; 3] {
    let mut out: [BTreeSet<String>; 3] = Default::default();
    for r in records {
        if let Some(p) = split.partition_of(&r.id) {
            out[p].insert(r.file.clone());
        }
    }
    out
}
