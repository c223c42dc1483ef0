//! Command-line entry point. Exit codes: 0 success, 1 controlled failure
//! (one JSON error line on stderr), 2 usage error.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::analysis::{backward_slice_with, extract_variables, parse_method, SliceMode};
use crate::corpus::{
    export_instruction_dataset, extract_directory, make_judger_samples, normalize_and_wrap, read_jsonl, split_corpus, write_jsonl, GoldRecord, JudgerSample,
    MethodRecord, Provenance,
};
use crate::judger::{FailingBackend, ModelBackend, RemoteBackend, RemoteConfig, ScriptedBackend};
use crate::metrics::{evaluate_end_to_end, judge_gated};
use crate::orchestrator::{run_pipeline_traced, OrchestratorConfig, PipelineResult, Resources};
use crate::retrieval::{Bm25Index, Bm25Params, RetrievalPair};

pub const CONFIG_ENV: &str = "LOGWEAVER_CONFIG";

#[derive(Parser, Debug)]
#[command(name = "logweaver", version, about = "Whether, where and what to log in Java methods")]
struct Cli {
    /// TOML config file; defaults to $LOGWEAVER_CONFIG when set.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Extract one record per method from every .java file under a directory.
    BuildCorpus {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Re-indent each method and wrap it in `class A`.
        #[arg(long)]
        normalize: bool,
    },
    /// Split the corpus and write the instruction dataset for one partition.
    ExportDataset {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        split: SplitArgs,
        /// Partition to export.
        #[arg(long, value_enum, default_value = "train")]
        partition: Partition,
        /// Partition whose samples serve as one-shot examples.
        #[arg(long, value_enum, default_value = "valid")]
        examples: Partition,
        /// Also write gold records for the exported samples.
        #[arg(long)]
        gold_out: Option<PathBuf>,
        /// Also write the exported targets as method records, ready for `run`.
        #[arg(long)]
        targets_out: Option<PathBuf>,
    },
    /// Build the case and example indexes used by `run`.
    Index {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        split: SplitArgs,
        /// Index only this partition (all records when absent).
        #[arg(long, value_enum)]
        partition: Option<Partition>,
    },
    /// Print the variable and slice reports for one line of a method.
    Analyze {
        /// File holding a single method.
        #[arg(long)]
        method: PathBuf,
        #[arg(long)]
        line: usize,
        #[arg(long, value_enum, default_value = "both")]
        tool: AnalyzeTool,
        /// Treat the line as an insertion point.
        #[arg(long)]
        insertion: bool,
    },
    /// Run the pipeline over method records.
    Run {
        #[arg(long)]
        targets: PathBuf,
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Directory for per-method transcript dumps.
        #[arg(long)]
        transcripts: Option<PathBuf>,
        /// Record wall time in telemetry.
        #[arg(long)]
        timings: bool,
        #[arg(long)]
        max_turns: Option<usize>,
        #[arg(long)]
        global_timeout: Option<f64>,
        #[arg(long)]
        retry_limit: Option<usize>,
        #[arg(long)]
        retrieval_k: Option<usize>,
    },
    /// Score pipeline results against gold records.
    Evaluate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Rubric for the judge backends listed in the config.
        #[arg(long)]
        rubric: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct SplitArgs {
    /// Train, valid and test fractions.
    #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [0.8, 0.1, 0.1])]
    ratios: Vec<f64>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Partition {
    Train,
    Valid,
    Test,
    All,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum AnalyzeTool {
    Variables,
    Slice,
    Both,
}

/// One model backend. Relative script paths resolve against the config file.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BackendSpec {
    Remote(RemoteConfig),
    Scripted {
        #[serde(default)]
        responses: Vec<String>,
        /// JSON array of responses, appended after `responses`.
        #[serde(default)]
        script: Option<PathBuf>,
        /// Fail this many calls before replaying.
        #[serde(default)]
        fail_first: usize,
    },
    Failing,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Backends {
    pub judger: Option<BackendSpec>,
    pub agent: Option<BackendSpec>,
    #[serde(default)]
    pub judges: Vec<BackendSpec>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub backends: Backends,
    #[serde(default)]
    pub orchestrator: OrchestratorConfig,
    /// Seconds per judge call during `evaluate`.
    #[serde(default)]
    pub judge_timeout: Option<f64>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: Config = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for spec in cfg.backends.judger.iter_mut().chain(cfg.backends.agent.iter_mut()).chain(cfg.backends.judges.iter_mut()) {
            if let BackendSpec::Scripted { script: Some(p), .. } = spec {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(cfg)
    }
}

pub fn build_backend(spec: &BackendSpec) -> Result<Box<dyn ModelBackend>> {
    Ok(match spec {
        BackendSpec::Remote(rc) => Box::new(RemoteBackend::new(rc.clone())?),
        BackendSpec::Failing => Box::new(FailingBackend::always()),
        BackendSpec::Scripted { responses, script, fail_first } => {
            let mut all = responses.clone();
            if let Some(p) = script {
                let text = fs::read_to_string(p).with_context(|| format!("reading script {}", p.display()))?;
                let more: Vec<String> = serde_json::from_str(&text).with_context(|| format!("script {} must be a JSON array of strings", p.display()))?;
                all.extend(more);
            }
            let scripted = ScriptedBackend::new(all);
            if *fail_first > 0 {
                Box::new(FailingBackend::transient(*fail_first, scripted))
            } else {
                Box::new(scripted)
            }
        }
    })
}

fn load_config(flag: Option<&Path>) -> Result<Config> {
    match flag.map(Path::to_path_buf).or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from)) {
        Some(p) => Config::load(&p),
        None => Ok(Config::default()),
    }
}

fn ratios(split: &SplitArgs) -> [f64; 3] {
    [split.ratios[0], split.ratios[1], split.ratios[2]]
}

fn select(records: &[MethodRecord], split: &SplitArgs, part: Partition) -> Result<Vec<MethodRecord>> {
    if part == Partition::All {
        return Ok(records.to_vec());
    }
    let s = split_corpus(records, ratios(split), split.seed)?;
    let want = part as usize;
    Ok(records.iter().filter(|r| s.partition_of(&r.id) == Some(want)).cloned().collect())
}

fn samples_of(records: &[MethodRecord]) -> Vec<JudgerSample> {
    records.iter().flat_map(make_judger_samples).collect()
}

/// Before/after pairs from every positive sample.
pub fn case_pairs(samples: &[JudgerSample], records: &[MethodRecord]) -> Vec<RetrievalPair> {
    let by_id: std::collections::HashMap<&str, &MethodRecord> = records.iter().map(|r| (r.id.as_str(), r)).collect();
    samples
        .iter()
        .filter(|s| matches!(s.provenance, Provenance::PositiveRemoval { .. }))
        .filter_map(|s| {
            let origin = by_id.get(s.origin_id.as_str())?;
            RetrievalPair::new(s.id.clone(), s.target_code.clone(), origin.source.clone()).ok()
        })
        .collect()
}

fn write_json<T: serde::Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display()))?,
        None => {
            let mut so = io::stdout().lock();
            writeln!(so, "{text}")?;
        }
    }
    Ok(())
}

fn file_safe(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_') { c } else { '_' }).collect()
}

/// Outcome of a subcommand that ran to completion.
enum Outcome {
    Ok,
    /// Completed with per-item failures; exit 1.
    Partial(String),
}

fn execute_command(cli: Cli) -> Result<Outcome> {
    let cfg_path = cli.config.clone();
    match cli.command {
        Command::BuildCorpus { input, out, normalize } => {
            let ex = extract_directory(&input)?;
            for w in &ex.warnings {
                log::warn!("{w}");
            }
            let mut records = ex.records;
            if normalize {
                records = records.iter().map(normalize_and_wrap).collect::<Result<_, _>>()?;
            }
            write_jsonl(&out, &records)?;
            log::info!("{} methods written to {}", records.len(), out.display());
        }
        Command::ExportDataset { corpus, out, split, partition, examples, gold_out, targets_out } => {
            let records: Vec<MethodRecord> = read_jsonl(&corpus)?;
            let targets = samples_of(&select(&records, &split, partition)?);
            let pool = samples_of(&select(&records, &split, examples)?);
            if pool.is_empty() {
                bail!("the example partition has no samples");
            }
            let index = Bm25Index::build(pool, Bm25Params::default())?;
            let mut sink = io::BufWriter::new(fs::File::create(&out).with_context(|| format!("creating {}", out.display()))?);
            let n = export_instruction_dataset(&targets, &index, &mut sink)?;
            log::info!("{n} instruction records written to {}", out.display());
            if let Some(p) = gold_out {
                write_jsonl(&p, &targets.iter().map(GoldRecord::from_sample).collect::<Vec<_>>())?;
            }
            if let Some(p) = targets_out {
                let file_of: std::collections::HashMap<&str, &str> = records.iter().map(|r| (r.id.as_str(), r.file.as_str())).collect();
                let recs = targets
                    .iter()
                    .map(|s| MethodRecord::from_source(s.id.clone(), file_of.get(s.origin_id.as_str()).copied().unwrap_or(""), s.target_code.clone()))
                    .collect::<Result<Vec<_>, _>>()?;
                write_jsonl(&p, &recs)?;
            }
        }
        Command::Index { corpus, out, split, partition } => {
            let records: Vec<MethodRecord> = read_jsonl(&corpus)?;
            let records = select(&records, &split, partition.unwrap_or(Partition::All))?;
            let samples = samples_of(&records);
            let pairs = case_pairs(&samples, &records);
            let res = Resources {
                cases: if pairs.is_empty() { None } else { Some(Bm25Index::build(pairs, Bm25Params::default())?) },
                examples: if samples.is_empty() { None } else { Some(Bm25Index::build(samples, Bm25Params::default())?) },
            };
            if res.cases.is_none() && res.examples.is_none() {
                bail!("no records to index");
            }
            write_json(Some(&out), &res)?;
        }
        Command::Analyze { method, line, tool, insertion } => {
            let src = fs::read_to_string(&method).with_context(|| format!("reading {}", method.display()))?;
            let m = parse_method(&src)?;
            let mode = if insertion { SliceMode::Insertion } else { SliceMode::Auto };
            let mut obj = serde_json::Map::new();
            if matches!(tool, AnalyzeTool::Variables | AnalyzeTool::Both) {
                obj.insert("variables".into(), serde_json::to_value(extract_variables(&m, line)?)?);
            }
            if matches!(tool, AnalyzeTool::Slice | AnalyzeTool::Both) {
                obj.insert("slice".into(), serde_json::to_value(backward_slice_with(&m, line, mode)?)?);
            }
            write_json(None, &obj)?;
        }
        Command::Run { targets, index, out, transcripts, timings, max_turns, global_timeout, retry_limit, retrieval_k } => {
            let cfg = load_config(cfg_path.as_deref())?;
            let mut oc = cfg.orchestrator.clone();
            oc.max_turns = max_turns.unwrap_or(oc.max_turns);
            oc.global_timeout = global_timeout.unwrap_or(oc.global_timeout);
            oc.retry_limit = retry_limit.unwrap_or(oc.retry_limit);
            oc.retrieval_k = retrieval_k.unwrap_or(oc.retrieval_k);
            oc.record_timings |= timings;
            oc.validate().map_err(anyhow::Error::msg)?;
            let judger = build_backend(cfg.backends.judger.as_ref().context("config has no [backends.judger]")?)?;
            let agent = build_backend(cfg.backends.agent.as_ref().context("config has no [backends.agent]")?)?;
            let records: Vec<MethodRecord> = read_jsonl(&targets)?;
            let text = fs::read_to_string(&index).with_context(|| format!("reading {}", index.display()))?;
            let res: Resources = serde_json::from_str(&text).with_context(|| format!("parsing index {}", index.display()))?;
            if let Some(d) = &transcripts {
                fs::create_dir_all(d)?;
            }
            // Sequential, so scripted backends replay in a fixed order.
            let mut results: Vec<PipelineResult> = Vec::with_capacity(records.len());
            for r in &records {
                let (result, transcript) = run_pipeline_traced(r, &res, judger.as_ref(), agent.as_ref(), &oc);
                if let Some(d) = &transcripts {
                    write_json(Some(&d.join(format!("{}.json", file_safe(&r.id)))), &transcript)?;
                }
                results.push(result);
            }
            write_jsonl(&out, &results)?;
            let failed: Vec<&str> = results.iter().filter(|r| !r.is_ok()).map(|r| r.method_id.as_str()).collect();
            if !failed.is_empty() {
                return Ok(Outcome::Partial(format!("{} of {} methods failed: {}", failed.len(), results.len(), failed.join(", "))));
            }
        }
        Command::Evaluate { pred, gold, out, rubric } => {
            let results: Vec<PipelineResult> = read_jsonl(&pred)?;
            let golds: Vec<GoldRecord> = read_jsonl(&gold)?;
            let mut report = evaluate_end_to_end(&results, &golds)?;
            if let Some(rp) = rubric {
                let cfg = load_config(cfg_path.as_deref())?;
                let rubric = fs::read_to_string(&rp).with_context(|| format!("reading {}", rp.display()))?;
                let judges = cfg.backends.judges.iter().map(build_backend).collect::<Result<Vec<_>>>()?;
                let refs: Vec<&dyn ModelBackend> = judges.iter().map(|b| b.as_ref()).collect();
                let timeout = Duration::from_secs_f64(cfg.judge_timeout.unwrap_or(120.0));
                report.judge = judge_gated(&results, &golds, &refs, &rubric, timeout)?;
            }
            write_json(out.as_deref(), &report)?;
        }
    }
    Ok(Outcome::Ok)
}

fn report_error(message: &str) {
    let line = serde_json::json!({ "error": message });
    eprintln!("{line}");
}

/// Parses `argv` (program name first) and runs the subcommand.
pub fn execute<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute_command(cli) {
        Ok(Outcome::Ok) => 0,
        Ok(Outcome::Partial(msg)) => {
            report_error(&msg);
            1
        }
        Err(e) => {
            report_error(&format!("{e:#}"));
            1
        }
    }
}
