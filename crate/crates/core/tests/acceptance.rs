//! One check per acceptance criterion. Each prints a single PASS/FAIL line;
//! tolerances and runtime budgets are constants below.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use logweaver::analysis::{backward_slice_with, classify_placement, extract_variables, parse_log_statement, parse_method, Level, LoggingStatement, SliceMode};
use logweaver::corpus::{extract_directory, files_by_partition, make_judger_samples, split_corpus, GoldRecord, MethodRecord, Provenance};
use logweaver::judger::{FailingBackend, Label, ScriptedBackend};
use logweaver::metrics::{bleu, confusion_metrics, evaluate_end_to_end, level_metrics, rouge, variable_metrics, ConfusionCounts, RougeVariant, VariableSet};
use logweaver::orchestrator::{run_pipeline, OrchestratorConfig, PipelineResult, Resources, Telemetry};
use logweaver::retrieval::{Bm25Index, Bm25Params, Indexable};

const TEXT_TOL: f64 = 1e-6;
const HAND_TOL: f64 = 1e-9;
const BM25_TOL: f64 = 1e-9;
const SPLIT_TOL_POINTS: f64 = 2.0;
const MAX_SLICE_DIVERGENCES: usize = 2;
const C1_BUDGET: Duration = Duration::from_secs(1);
const C2_BUDGET: Duration = Duration::from_secs(5);
const C5_BUDGET: Duration = Duration::from_secs(2);
const SUITE_BUDGET: Duration = Duration::from_secs(60);

type Check = Result<String, String>;
type CheckFn = fn() -> Check;

fn report(n: usize, title: &str, start: Instant, budget: Option<Duration>, outcome: Check) {
    let took = start.elapsed();
    let outcome = match (outcome, budget) {
        (Ok(_), Some(b)) if took >= b => Err(format!("took {took:?}, budget {b:?}")),
        (o, _) => o,
    };
    match &outcome {
        Ok(detail) => println!("criterion {n} PASS: {title} ({detail}; {took:?})"),
        Err(detail) => println!("criterion {n} FAIL: {title} ({detail}; {took:?})"),
    }
    if let Err(e) = outcome {
        panic!("criterion {n} failed: {e}");
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---- 1: metric oracle suite ---------------------------------------------

fn check_metric_oracles() -> Check {
    for (i, (c, r)) in common::TEXT_CASES.iter().enumerate() {
        let pairs = [
            ("BLEU-1", bleu(c, r, 1), common::oracle_bleu(c, r, 1)),
            ("BLEU-4", bleu(c, r, 4), common::oracle_bleu(c, r, 4)),
            ("ROUGE-1", rouge(c, r, RougeVariant::Rouge1), common::oracle_rouge1(c, r)),
            ("ROUGE-L", rouge(c, r, RougeVariant::RougeL), common::oracle_rouge_l(c, r)),
        ];
        for (name, got, want) in pairs {
            ensure(close(got, want, TEXT_TOL), || format!("case {i} {name}: {got} vs oracle {want}"))?;
        }
    }

    let w = confusion_metrics(&ConfusionCounts::new(90, 20, 80, 10));
    ensure(close(w.recall, 0.9, HAND_TOL) && close(w.ba, 0.85, HAND_TOL), || format!("BA case: {w:?}"))?;
    ensure(close(w.precision, 90.0 / 110.0, HAND_TOL), || format!("precision {}", w.precision))?;
    let f1 = 2.0 * (90.0 / 110.0) * 0.9 / (90.0 / 110.0 + 0.9);
    ensure(close(w.f1, f1, HAND_TOL), || format!("f1 {}", w.f1))?;

    let (la, aod) = level_metrics(&[Level::Debug], &[Level::Error]).map_err(|e| e.to_string())?;
    ensure(close(la, 0.0, HAND_TOL) && close(aod, 0.25, HAND_TOL), || format!("AOD 0.25 case: la {la} aod {aod}"))?;
    let (la, aod) = level_metrics(&[Level::Info, Level::Warn], &[Level::Info, Level::Info]).map_err(|e| e.to_string())?;
    ensure(close(la, 0.5, HAND_TOL) && close(aod, 0.75, HAND_TOL), || format!("AOD 0.75 case: la {la} aod {aod}"))?;

    let v = variable_metrics(&VariableSet::from_exprs(["a"]), &VariableSet::from_exprs(["a", "b"]));
    ensure(v.exact == 0 && close(v.precision, 1.0, HAND_TOL) && close(v.recall, 0.5, HAND_TOL) && close(v.f1, 2.0 / 3.0, HAND_TOL), || {
        format!("variable case: {v:?}")
    })?;
    let empty = variable_metrics(&VariableSet::from_exprs(Vec::<&str>::new()), &VariableSet::from_exprs(Vec::<&str>::new()));
    ensure(empty.exact == 1 && close(empty.f1, 1.0, HAND_TOL), || format!("both-empty case: {empty:?}"))?;
    // PMR over three statements: exact, partial, exact.
    let pmr = [(vec!["x"], vec!["x"]), (vec!["a"], vec!["a", "b"]), (vec!["e", "id"], vec!["id", "e"])]
        .iter()
        .map(|(p, g)| variable_metrics(&VariableSet::from_exprs(p), &VariableSet::from_exprs(g)).exact as f64)
        .sum::<f64>()
        / 3.0;
    ensure(close(pmr, 2.0 / 3.0, HAND_TOL), || format!("PMR {pmr}"))?;
    Ok(format!("{} text cases x 4 metrics, hand cases", common::TEXT_CASES.len()))
}

#[test]
fn criterion_1_metric_oracles() {
    let t = Instant::now();
    report(1, "metric oracle suite", t, Some(C1_BUDGET), check_metric_oracles());
}

// ---- 2: analysis fixtures -----------------------------------------------

fn check_analysis_fixtures() -> Check {
    let fx = common::analysis_fixtures();
    ensure(fx.method.len() == 30, || format!("expected 30 fixture methods, found {}", fx.method.len()))?;
    let (mut var_total, mut place_total) = (0, 0);
    let mut slice_misses: Vec<String> = Vec::new();
    for m in &fx.method {
        let tree = parse_method(&m.source).map_err(|e| format!("{}: {e}", m.name))?;
        for q in &m.variables {
            var_total += 1;
            let r = extract_variables(&tree, q.line).map_err(|e| format!("{} line {}: {e}", m.name, q.line))?;
            let set = |v: &[logweaver::analysis::ScopedVar]| v.iter().map(|x| x.name.clone()).collect::<BTreeSet<_>>();
            let want = |v: &[String]| v.iter().cloned().collect::<BTreeSet<_>>();
            ensure(set(&r.fields) == want(&q.fields) && set(&r.params) == want(&q.params) && set(&r.locals) == want(&q.locals), || {
                format!("{} variables at line {}: got {:?}", m.name, q.line, r)
            })?;
        }
        for q in &m.placement {
            place_total += 1;
            let got = classify_placement(&tree, q.line).map_err(|e| format!("{} line {}: {e}", m.name, q.line))?;
            ensure(got.as_str() == q.expect, || format!("{} placement at line {}: got {}, want {}", m.name, q.line, got.as_str(), q.expect))?;
        }
        let mut miss = Vec::new();
        for q in &m.slice {
            let mode = if q.mode.as_deref() == Some("insertion") { SliceMode::Insertion } else { SliceMode::Auto };
            let r = backward_slice_with(&tree, q.line, mode).map_err(|e| format!("{} line {}: {e}", m.name, q.line))?;
            let mut lines: Vec<usize> = r.data_deps.iter().map(|d| d.line).collect();
            lines.sort();
            let mut want = q.deps.clone();
            want.sort();
            if lines != want || r.control_context != q.context {
                miss.push(format!("line {}: deps {:?} ctx {:?}", q.line, r.data_deps, r.control_context));
            }
        }
        if !miss.is_empty() {
            if m.divergence.is_none() {
                return Err(format!("{}: undocumented slice divergence: {}", m.name, miss.join("; ")));
            }
            slice_misses.push(m.name.clone());
        }
    }
    ensure(slice_misses.len() <= MAX_SLICE_DIVERGENCES, || format!("slice divergences on {slice_misses:?}"))?;
    Ok(format!(
        "{var_total} variable queries, {place_total} placement queries, slices {}/30 (documented divergences: {slice_misses:?})",
        30 - slice_misses.len()
    ))
}

#[test]
fn criterion_2_analysis_fixtures() {
    let t = Instant::now();
    report(2, "analysis fixtures", t, Some(C2_BUDGET), check_analysis_fixtures());
}

// ---- 3: BM25 properties -------------------------------------------------

#[derive(Clone, Debug)]
struct Doc {
    id: String,
    text: String,
}

impl Indexable for Doc {
    fn doc_id(&self) -> &str {
        &self.id
    }
    fn index_text(&self) -> &str {
        &self.text
    }
}

fn doc(id: &str, text: &str) -> Doc {
    Doc { id: id.into(), text: text.into() }
}

/// Okapi BM25 from the formula, over pre-tokenized lowercase words.
fn okapi(docs: &[Vec<&str>], query: &[&str], k1: f64, b: f64) -> Vec<f64> {
    let n = docs.len() as f64;
    let avgdl = docs.iter().map(|d| d.len()).sum::<usize>() as f64 / n;
    let distinct: BTreeSet<&str> = query.iter().copied().collect();
    docs.iter()
        .map(|d| {
            distinct
                .iter()
                .map(|q| {
                    let df = docs.iter().filter(|x| x.contains(q)).count() as f64;
                    let tf = d.iter().filter(|t| *t == q).count() as f64;
                    let idf = ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
                    idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * d.len() as f64 / avgdl))
                })
                .sum()
        })
        .collect()
}

fn check_bm25() -> Check {
    // Self-retrieval over random corpora of 20 documents.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let vocab: Vec<String> = (0..500).map(|i| format!("w{i}x")).collect();
    for trial in 0..50 {
        let docs: Vec<Doc> = (0..20)
            .map(|i| {
                let len = rng.gen_range(10..40);
                let words: Vec<&str> = (0..len).map(|_| vocab[rng.gen_range(0..vocab.len())].as_str()).collect();
                doc(&format!("d{i:02}"), &words.join(" "))
            })
            .collect();
        let pick = rng.gen_range(0..docs.len());
        let index = Bm25Index::build(docs.clone(), Bm25Params::default()).map_err(|e| e.to_string())?;
        let top = index.retrieve(&docs[pick].text, 1).map_err(|e| e.to_string())?;
        ensure(top[0].0.id == docs[pick].id, || format!("trial {trial}: {} ranked first, expected {}", top[0].0.id, docs[pick].id))?;

        // Permuted insertion order gives the same ranking.
        let mut shuffled = docs.clone();
        shuffled.shuffle(&mut rng);
        let other = Bm25Index::build(shuffled, Bm25Params::default()).map_err(|e| e.to_string())?;
        let q = &docs[rng.gen_range(0..docs.len())].text;
        let a: Vec<(String, f64)> = index.retrieve(q, 20).unwrap().into_iter().map(|(d, s)| (d.id.clone(), s)).collect();
        let b: Vec<(String, f64)> = other.retrieve(q, 20).unwrap().into_iter().map(|(d, s)| (d.id.clone(), s)).collect();
        ensure(a == b, || format!("trial {trial}: ranking depends on insertion order"))?;
    }

    let texts = ["apple banana apple", "banana cherry", "cherry cherry date elder fig"];
    let docs: Vec<Doc> = texts.iter().enumerate().map(|(i, t)| doc(&format!("h{i}"), t)).collect();
    let index = Bm25Index::build(docs, Bm25Params::default()).map_err(|e| e.to_string())?;
    let toks: Vec<Vec<&str>> = texts.iter().map(|t| t.split(' ').collect()).collect();
    for query in ["apple", "banana cherry", "cherry fig apple", "grape"] {
        let want = okapi(&toks, &query.split(' ').collect::<Vec<_>>(), 1.2, 0.75);
        let got = index.scores(query);
        for (i, (g, w)) in got.iter().zip(&want).enumerate() {
            ensure(close(*g, *w, BM25_TOL), || format!("query {query:?} doc {i}: {g} vs formula {w}"))?;
        }
    }
    Ok("50 self-retrieval trials, 50 permutation checks, 4 hand-scored queries".into())
}

#[test]
fn criterion_3_bm25() {
    let t = Instant::now();
    report(3, "BM25 properties", t, None, check_bm25());
}

// ---- 4: dataset pipeline ------------------------------------------------

fn check_dataset() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    common::write_synthetic_corpus(dir.path(), 200, 11);
    let ex = extract_directory(dir.path()).map_err(|e| e.to_string())?;
    let records = ex.records;
    let files: BTreeSet<&str> = records.iter().map(|r| r.file.as_str()).collect();
    ensure(files.len() == 200, || format!("{} files extracted", files.len()))?;

    let split = split_corpus(&records, [0.8, 0.1, 0.1], 3).map_err(|e| e.to_string())?;
    let parts = files_by_partition(&split, &records);
    for i in 0..3 {
        for j in i + 1..3 {
            let shared = parts[i].intersection(&parts[j]).count();
            ensure(shared == 0, || format!("partitions {i} and {j} share {shared} files"))?;
        }
    }
    let frac = |ids: &[String]| {
        let set: BTreeSet<&str> = ids.iter().map(String::as_str).collect();
        let sel: Vec<&MethodRecord> = records.iter().filter(|r| set.contains(r.id.as_str())).collect();
        100.0 * sel.iter().filter(|r| r.has_log).count() as f64 / sel.len() as f64
    };
    let global = 100.0 * records.iter().filter(|r| r.has_log).count() as f64 / records.len() as f64;
    let fr = [frac(&split.train), frac(&split.valid), frac(&split.test)];
    for (name, f) in ["train", "valid", "test"].iter().zip(fr) {
        ensure((f - global).abs() <= SPLIT_TOL_POINTS, || format!("{name} has_log {f:.2}% vs global {global:.2}%"))?;
    }

    let mut positives = 0;
    for r in &records {
        let samples = make_judger_samples(r);
        ensure(samples.len() == r.log_statements.len() + 1, || format!("{}: {} samples for {} logs", r.id, samples.len(), r.log_statements.len()))?;
        for s in samples.iter().filter(|s| matches!(s.provenance, Provenance::PositiveRemoval { .. })) {
            positives += 1;
            let re = MethodRecord::from_source(s.id.clone(), r.file.clone(), s.target_code.clone())
                .map_err(|e| format!("{}: positive does not re-parse: {e}", s.id))?;
            ensure(re.log_statements.len() + 1 == r.log_statements.len(), || format!("{}: {} logs left", s.id, re.log_statements.len()))?;
        }
    }
    Ok(format!(
        "{} methods, has_log global {global:.2}% vs train/valid/test {:.2}/{:.2}/{:.2}%, {positives} positives re-parse",
        records.len(),
        fr[0],
        fr[1],
        fr[2]
    ))
}

#[test]
fn criterion_4_dataset_pipeline() {
    let t = Instant::now();
    report(4, "dataset pipeline", t, None, check_dataset());
}

// ---- 5: golden scenario -------------------------------------------------

fn scenario_resources(sc: &common::Scenario) -> Resources {
    let pairs = sc.case.iter().map(|c| logweaver::retrieval::RetrievalPair::new(c.id.clone(), c.before.clone(), c.after.clone()).unwrap()).collect();
    Resources { cases: Some(Bm25Index::build(pairs, Bm25Params::default()).unwrap()), examples: None }
}

fn check_golden_scenario() -> Check {
    let sc = common::scenario();
    let res = scenario_resources(&sc);
    let judger = ScriptedBackend::new(sc.method.iter().map(|m| m.judge.clone()));
    let agent = ScriptedBackend::new(sc.method.iter().flat_map(|m| m.agent.clone()));
    let cfg = OrchestratorConfig::default();
    let mut gated = 0;
    for m in &sc.method {
        let rec = MethodRecord::from_source(m.id.clone(), "Scenario.java", m.source.clone()).map_err(|e| e.to_string())?;
        let before = agent.calls();
        let r = run_pipeline(&rec, &res, &judger, &agent, &cfg);
        ensure(r.is_ok(), || format!("{}: {:?}", m.id, r.failure))?;
        ensure(r.telemetry.tool_calls == m.tool_calls, || format!("{}: {} tool calls, script has {}", m.id, r.telemetry.tool_calls, m.tool_calls))?;
        ensure(r.telemetry.agent_calls == agent.calls() - before, || format!("{}: agent call count drifted", m.id))?;
        match &m.golden {
            Some(g) => {
                let golden = common::read_fixture(&format!("scenario/{g}"));
                ensure(r.final_code.as_deref() == Some(golden.as_str()), || format!("{}: final_code differs from {g}:\n{:?}", m.id, r.final_code))?;
                ensure(r.located_line == m.located_line, || format!("{}: located {:?}", m.id, r.located_line))?;
                ensure(r.decision == Some(Label::Log), || format!("{}: decision {:?}", m.id, r.decision))?;
            }
            None => {
                gated += 1;
                ensure(r.decision == Some(Label::NoLog), || format!("{}: decision {:?}", m.id, r.decision))?;
                ensure(r.telemetry.agent_calls == 0 && r.telemetry.tool_calls == 0, || format!("{}: gated method made calls {:?}", m.id, r.telemetry))?;
                ensure(r.final_code.is_none(), || format!("{}: gated method has code", m.id))?;
            }
        }
    }
    ensure(agent.remaining() == 0 && judger.remaining() == 0, || "scripts not fully consumed".into())?;
    ensure(gated == 1, || format!("{gated} gated methods"))?;
    Ok(format!("{} methods, 1 gated", sc.method.len()))
}

#[test]
fn criterion_5_golden_scenario() {
    let t = Instant::now();
    report(5, "end-to-end golden scenario", t, Some(C5_BUDGET), check_golden_scenario());
}

// ---- 6: robustness ------------------------------------------------------

const METHOD: &str = "void work(int n) {\n  int k = n * 2;\n  emit(k);\n}";
const LOCATED: &str = "```java\nvoid work(int n) {\n  int k = n * 2;\n  <<need_logging>>\n  emit(k);\n}\n```";
const GENERATED: &str = "```java\nvoid work(int n) {\n  int k = n * 2;\n  log.debug(\"k={}\", k);\n  emit(k);\n}\n```";
const TOOL: &str = r#"{"thoughts":"look","command":{"tool":"variable_extractor","args":{"line":3}}}"#;

fn robustness_resources() -> Resources {
    let pair = logweaver::retrieval::RetrievalPair::new("c", "void a() {\n  b();\n}", "void a() {\n  log.info(\"b\");\n  b();\n}").unwrap();
    Resources { cases: Some(Bm25Index::build(vec![pair], Bm25Params::default()).unwrap()), examples: None }
}

fn write_cli_inputs(dir: &std::path::Path, agent_kind: &str) -> Result<(), String> {
    let rec = MethodRecord::from_source("W::work@1", "W.java", METHOD).map_err(|e| e.to_string())?;
    logweaver::corpus::write_jsonl(&dir.join("targets.jsonl"), &[rec]).map_err(|e| e.to_string())?;
    fs::write(dir.join("index.json"), serde_json::to_string(&robustness_resources()).unwrap()).map_err(|e| e.to_string())?;
    let cfg = format!(
        "[orchestrator]\nretry_limit = 2\n\n[backends.judger]\nkind = \"scripted\"\nresponses = [\"LOG\"]\n\n[backends.agent]\nkind = \"{agent_kind}\"\n"
    );
    fs::write(dir.join("config.toml"), cfg).map_err(|e| e.to_string())
}

fn check_robustness() -> Check {
    let res = robustness_resources();
    let rec = MethodRecord::from_source("W::work@1", "W.java", METHOD).map_err(|e| e.to_string())?;
    let cfg = OrchestratorConfig { retry_limit: 2, ..Default::default() };

    // One transient failure.
    let agent = FailingBackend::transient(1, ScriptedBackend::new([LOCATED, GENERATED]));
    let r = run_pipeline(&rec, &res, &ScriptedBackend::new(["LOG"]), &agent, &cfg);
    ensure(r.is_ok() && r.telemetry.retries == 1, || format!("transient: {:?} retries {}", r.failure, r.telemetry.retries))?;

    // Permanent failure, in-process and through the CLI.
    let r = run_pipeline(&rec, &res, &ScriptedBackend::new(["LOG"]), &FailingBackend::always(), &cfg);
    ensure(!r.is_ok() && r.telemetry.retries == 2, || format!("permanent: {:?} retries {}", r.failure, r.telemetry.retries))?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    write_cli_inputs(dir.path(), "failing")?;
    let p = |f: &str| dir.path().join(f).display().to_string();
    let code = logweaver::cli::execute([
        "logweaver",
        "run",
        "--config",
        &p("config.toml"),
        "--targets",
        &p("targets.jsonl"),
        "--index",
        &p("index.json"),
        "--out",
        &p("results.jsonl"),
    ]);
    ensure(code == 1, || format!("CLI exit code {code}"))?;
    let written: Vec<PipelineResult> = logweaver::corpus::read_jsonl(&dir.path().join("results.jsonl")).map_err(|e| e.to_string())?;
    ensure(written.len() == 1 && written[0].failure.is_some() && written[0].telemetry.retries == 2, || format!("CLI result {written:?}"))?;

    // Never finalizing.
    let max_turns = 4;
    let agent = ScriptedBackend::new(vec![TOOL; 50]);
    let cfg_turns = OrchestratorConfig { max_turns, ..Default::default() };
    let r = run_pipeline(&rec, &res, &ScriptedBackend::new(["LOG"]), &agent, &cfg_turns);
    ensure(!r.is_ok() && r.telemetry.agent_calls == max_turns && agent.calls() == max_turns, || {
        format!("never-finalizing: {:?} after {} calls", r.failure, agent.calls())
    })?;

    // Global timeout with slow replies.
    let global = 0.3;
    let per_call = 0.2;
    let agent = ScriptedBackend::new(vec![TOOL; 50]).with_delay(Duration::from_millis(120));
    let cfg_time = OrchestratorConfig { global_timeout: global, request_timeout: per_call, max_turns: 100, ..Default::default() };
    let t = Instant::now();
    let r = run_pipeline(&rec, &res, &ScriptedBackend::new(["LOG"]), &agent, &cfg_time);
    let took = t.elapsed().as_secs_f64();
    ensure(r.failure.as_deref().is_some_and(|f| f.contains("timeout")), || format!("timeout scenario: {:?}", r.failure))?;
    ensure(took <= global + per_call, || format!("timeout fired after {took:.3}s, bound {:.3}s", global + per_call))?;
    Ok(format!("transient recovered, permanent retries=2 exit 1, turn cap {max_turns}, timeout after {took:.3}s"))
}

#[test]
fn criterion_6_robustness() {
    let t = Instant::now();
    report(6, "robustness", t, None, check_robustness());
}

// ---- 7: gated evaluation ------------------------------------------------

fn stmt(level: Level, template: &str, vars: &[&str], line: usize) -> LoggingStatement {
    let args: String = vars.iter().map(|v| format!(", {v}")).collect();
    let raw = format!("log.{}(\"{template}\"{args});", level.as_str().to_lowercase());
    let mut s = parse_log_statement(&raw).expect("hand-built statement parses");
    s.line = line;
    s
}

fn result(id: &str, line: usize, s: LoggingStatement) -> PipelineResult {
    PipelineResult {
        method_id: id.into(),
        decision: Some(Label::Log),
        located_line: Some(line),
        generated_statement: Some(s),
        final_code: None,
        failure: None,
        telemetry: Telemetry::default(),
        warnings: Vec::new(),
    }
}

const GATED_SRC: &str = "void f(int a, int b) {\n  int x = a;\n  if (x > b) {\n    use(x);\n  }\n  done(a, b);\n}";

fn check_gated() -> Check {
    let gold = |id: &str, line: usize, s: LoggingStatement| GoldRecord {
        method_id: id.into(),
        label: Label::Log,
        line: Some(line),
        statement: Some(s),
        source: GATED_SRC.into(),
    };
    let golds = vec![
        gold("m1", 3, stmt(Level::Info, "value {}", &["x"], 3)),
        gold("m2", 6, stmt(Level::Info, "finished {} {}", &["a", "b"], 6)),
        gold("m3", 2, stmt(Level::Debug, "start processing all items", &["a", "b"], 2)),
        gold("m4", 4, stmt(Level::Warn, "big {}", &["x"], 4)),
    ];
    let results = vec![
        // exact
        result("m1", 3, stmt(Level::Info, "value {}", &["x"], 3)),
        // one line off in the same block; level one step off
        result("m2", 7, stmt(Level::Warn, "finished {} {}", &["a", "b"], 7)),
        // right line; partial variables; shorter template
        result("m3", 2, stmt(Level::Debug, "start processing items", &["a"], 2)),
        // line 3 is outside the if block that holds line 4
        result("m4", 3, stmt(Level::Warn, "big {}", &["x"], 3)),
    ];
    let r = evaluate_end_to_end(&results, &golds).map_err(|e| e.to_string())?;
    ensure(r.counts.whether == 4 && r.counts.where_ == 4 && r.counts.what == 3, || format!("counts {:?}", r.counts))?;
    ensure(r.where_.is_some_and(|pa| close(pa, 0.75, HAND_TOL)), || format!("PA {:?}", r.where_))?;
    let w = r.what.ok_or("no what metrics")?;

    // Hand bookkeeping over m1..m3.
    let bleu1_m3 = (1.0f64 - 4.0 / 3.0).exp();
    let bleu4_m3 = (1.0f64 - 4.0 / 3.0).exp() * (1.0f64 * (2.0 / 3.0) * 0.5 * 1.0).powf(0.25);
    let want: BTreeMap<&str, f64> = [
        ("la", 2.0 / 3.0),
        ("aod", (1.0 + 0.5 + 1.0) / 3.0),
        ("pmr", 2.0 / 3.0),
        ("variable_f1", (1.0 + 1.0 + 2.0 / 3.0) / 3.0),
        ("bleu_1", (2.0 + bleu1_m3) / 3.0),
        ("bleu_4", (2.0 + bleu4_m3) / 3.0),
        ("rouge_1", (2.0 + 6.0 / 7.0) / 3.0),
        ("rouge_l", (2.0 + 6.0 / 7.0) / 3.0),
    ]
    .into_iter()
    .collect();
    let got: BTreeMap<&str, f64> = [
        ("la", w.la),
        ("aod", w.aod),
        ("pmr", w.pmr),
        ("variable_f1", w.variable_f1),
        ("bleu_1", w.bleu_1),
        ("bleu_4", w.bleu_4),
        ("rouge_1", w.rouge_1),
        ("rouge_l", w.rouge_l),
    ]
    .into_iter()
    .collect();
    for (k, v) in &want {
        ensure(close(got[k], *v, HAND_TOL), || format!("{k}: {} vs hand {v}", got[k]))?;
    }
    Ok("PA 3/4, what over 3 methods".into())
}

#[test]
fn criterion_7_gated_evaluation() {
    let t = Instant::now();
    report(7, "gated evaluation", t, None, check_gated());
}

// ---- 8: whole suite -----------------------------------------------------

#[test]
fn criterion_8_offline_suite_budget() {
    // The suite uses scripted backends only; no remote backend is built.
    let t = Instant::now();
    let checks: [(&str, CheckFn); 7] = [
        ("1", check_metric_oracles),
        ("2", check_analysis_fixtures),
        ("3", check_bm25),
        ("4", check_dataset),
        ("5", check_golden_scenario),
        ("6", check_robustness),
        ("7", check_gated),
    ];
    let failed: Vec<String> = checks.iter().filter_map(|(n, f)| f().err().map(|e| format!("{n}: {e}"))).collect();
    let outcome = if failed.is_empty() { Ok("criteria 1-7 re-run in sequence".to_string()) } else { Err(failed.join(" | ")) };
    report(8, "offline suite under budget", t, Some(SUITE_BUDGET), outcome);
}
