#![allow(dead_code)]

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

pub fn read_fixture(rel: &str) -> String {
    fs::read_to_string(fixture(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

// ---- text metric oracle -------------------------------------------------
//
// Written from the textbook definitions with plain loops and string keys so
// it shares nothing with the library: n-grams are joined with a separator,
// counts live in a HashMap<String, usize>, and LCS uses the full table.

pub fn oracle_tokens(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

fn grams(toks: &[String], n: usize) -> HashMap<String, usize> {
    let mut m = HashMap::new();
    let mut i = 0;
    while i + n <= toks.len() {
        *m.entry(toks[i..i + n].join("\u{1}")).or_insert(0) += 1;
        i += 1;
    }
    m
}

pub fn oracle_bleu(cand: &str, reference: &str, max_n: usize) -> f64 {
    let c = oracle_tokens(cand);
    let r = oracle_tokens(reference);
    if c.is_empty() || r.is_empty() {
        return if c.is_empty() && r.is_empty() { 1.0 } else { 0.0 };
    }
    let mut matches = Vec::new();
    let mut totals = Vec::new();
    for n in 1..=max_n {
        let cg = grams(&c, n);
        let rg = grams(&r, n);
        let mut m = 0;
        for (g, k) in &cg {
            let rk = rg.get(g).copied().unwrap_or(0);
            m += if *k < rk { *k } else { rk };
        }
        matches.push(m as f64);
        totals.push(if c.len() >= n { (c.len() - n + 1) as f64 } else { 0.0 });
    }
    let any_zero = matches.contains(&0.0);
    let mut product = 1.0f64;
    for i in 0..max_n {
        let p = if any_zero && i >= 1 {
            (matches[i] + 1.0) / (totals[i] + 1.0)
        } else if totals[i] == 0.0 {
            0.0
        } else {
            matches[i] / totals[i]
        };
        product *= p;
    }
    if product == 0.0 {
        return 0.0;
    }
    let geo = product.powf(1.0 / max_n as f64);
    let bp = if c.len() > r.len() { 1.0 } else { (1.0 - r.len() as f64 / c.len() as f64).exp() };
    bp * geo
}

fn oracle_f1(overlap: f64, c: usize, r: usize) -> f64 {
    if overlap == 0.0 {
        return 0.0;
    }
    let p = overlap / c as f64;
    let rec = overlap / r as f64;
    2.0 * p * rec / (p + rec)
}

pub fn oracle_rouge1(cand: &str, reference: &str) -> f64 {
    let c = oracle_tokens(cand);
    let r = oracle_tokens(reference);
    if c.is_empty() || r.is_empty() {
        return if c.is_empty() && r.is_empty() { 1.0 } else { 0.0 };
    }
    let cg = grams(&c, 1);
    let rg = grams(&r, 1);
    let overlap: usize = cg.iter().map(|(g, k)| (*k).min(rg.get(g).copied().unwrap_or(0))).sum();
    oracle_f1(overlap as f64, c.len(), r.len())
}

pub fn oracle_rouge_l(cand: &str, reference: &str) -> f64 {
    let c = oracle_tokens(cand);
    let r = oracle_tokens(reference);
    if c.is_empty() || r.is_empty() {
        return if c.is_empty() && r.is_empty() { 1.0 } else { 0.0 };
    }
    let mut t = vec![vec![0usize; r.len() + 1]; c.len() + 1];
    for i in 1..=c.len() {
        for j in 1..=r.len() {
            t[i][j] = if c[i - 1] == r[j - 1] { t[i - 1][j - 1] + 1 } else { t[i - 1][j].max(t[i][j - 1]) };
        }
    }
    oracle_f1(t[c.len()][r.len()] as f64, c.len(), r.len())
}

/// Frozen candidate/reference pairs for the text metrics.
pub const TEXT_CASES: [(&str, &str); 20] = [
    ("start processing items", "start processing all items"),
    ("start processing items", "start processing items"),
    ("connection to {} failed", "connection to {} failed after {} retries"),
    ("failed to open file {}", "could not open {}"),
    ("user {} logged in", "user {} logged out"),
    ("cache miss for key {}", "cache hit for key {}"),
    ("done", "processing finished"),
    ("received {} bytes from {}", "received {} bytes"),
    ("a b c d e f", "a b c d e f"),
    ("the the the the", "the cat sat on the mat"),
    ("retrying request {} of {}", "retry {} of {} for request {}"),
    ("timeout waiting for lock", "waiting for lock timed out"),
    ("shutting down", "shutting down now"),
    ("x y z", "z y x"),
    ("invalid config value {} for {}", "invalid value {} in config {}"),
    ("job {} completed in {} ms", "job {} completed in {} ms with status {}"),
    ("error", "error"),
    ("loaded {} entries from cache", "loaded {} cache entries"),
    ("unable to parse {} as int", "unable to parse port {}"),
    ("one two three four five", "five four three two one"),
];

// ---- analysis fixtures --------------------------------------------------

#[derive(Debug, Deserialize)]
pub struct AnalysisFixtures {
    pub method: Vec<AnnotatedMethod>,
}

#[derive(Debug, Deserialize)]
pub struct AnnotatedMethod {
    pub name: String,
    pub source: String,
    #[serde(default)]
    pub divergence: Option<String>,
    pub variables: Vec<VarQuery>,
    pub placement: Vec<PlacementQuery>,
    pub slice: Vec<SliceQuery>,
}

#[derive(Debug, Deserialize)]
pub struct VarQuery {
    pub line: usize,
    pub fields: Vec<String>,
    pub params: Vec<String>,
    pub locals: Vec<String>,
}

#[derive(Debug, Deserialize)]
pub struct PlacementQuery {
    pub line: usize,
    pub expect: String,
}

#[derive(Debug, Deserialize)]
pub struct SliceQuery {
    pub line: usize,
    #[serde(default)]
    pub mode: Option<String>,
    pub deps: Vec<usize>,
    pub context: Vec<String>,
}

pub fn analysis_fixtures() -> AnalysisFixtures {
    toml::from_str(&read_fixture("analysis_methods.toml")).expect("analysis fixture parses")
}

// ---- golden scenario ----------------------------------------------------

#[derive(Debug, Deserialize)]
pub struct Scenario {
    pub case: Vec<ScenarioCase>,
    pub method: Vec<ScenarioMethod>,
}

#[derive(Debug, Deserialize)]
pub struct ScenarioCase {
    pub id: String,
    pub before: String,
    pub after: String,
}

#[derive(Debug, Deserialize)]
pub struct ScenarioMethod {
    pub id: String,
    pub source: String,
    pub judge: String,
    #[serde(default)]
    pub agent: Vec<String>,
    pub tool_calls: usize,
    #[serde(default)]
    pub golden: Option<String>,
    #[serde(default)]
    pub located_line: Option<usize>,
}

pub fn scenario() -> Scenario {
    toml::from_str(&read_fixture("scenario/scenario.toml")).expect("scenario fixture parses")
}

// ---- synthetic corpus ---------------------------------------------------

const LEVELS: [&str; 5] = ["trace", "debug", "info", "warn", "error"];
const WORDS: [&str; 12] = ["start", "stop", "load", "save", "user", "order", "cache", "retry", "item", "request", "config", "value"];

fn synthetic_method(rng: &mut ChaCha8Rng, name: &str, logs: usize) -> String {
    let mut body: Vec<String> = Vec::new();
    let vars = rng.gen_range(1..4);
    for v in 0..vars {
        body.push(format!("int v{v} = p + {};", rng.gen_range(0..100)));
    }
    if rng.gen_bool(0.5) {
        body.push("if (p > 0) {".into());
        body.push("  p = p - 1;".into());
        body.push("}".into());
    }
    for _ in 0..logs {
        let lvl = LEVELS[rng.gen_range(0..LEVELS.len())];
        let w = WORDS[rng.gen_range(0..WORDS.len())];
        let at = rng.gen_range(0..=body.len());
        body.insert(at, format!("log.{lvl}(\"{w} {{}}\", p);"));
    }
    body.push("use(p);".into());
    let mut out = format!("  void {name}(int p) {{\n");
    for l in body {
        let _ = writeln!(out, "    {l}");
    }
    out.push_str("  }\n");
    out
}

/// Writes `files` Java files under `dir`, each with 1 to 4 methods carrying
/// 0 to 3 logging statements.
pub fn write_synthetic_corpus(dir: &Path, files: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for f in 0..files {
        let pkg = dir.join(format!("pkg{}", f % 7));
        fs::create_dir_all(&pkg).unwrap();
        let mut src = format!("package pkg{};\n\nclass C{f} {{\n  private Logger log;\n\n", f % 7);
        let methods = rng.gen_range(1..5);
        for m in 0..methods {
            let logs = *[0usize, 0, 0, 1, 1, 2, 3].choose(&mut rng).unwrap();
            src.push_str(&synthetic_method(&mut rng, &format!("m{m}"), logs));
            src.push('\n');
        }
        src.push_str("}\n");
        fs::write(pkg.join(format!("C{f}.java")), src).unwrap();
    }
}
