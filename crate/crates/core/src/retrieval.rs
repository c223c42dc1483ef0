//! Okapi BM25 over code snippets.
//!
//! Documents are kept sorted by id, so internal positions double as the
//! tie-break order and rankings do not depend on insertion order.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const INDEX_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("cannot build an index from an empty corpus")]
    EmptyCorpus,
    #[error("index has no documents")]
    EmptyIndex,
    #[error("index error: {0}")]
    IndexError(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed index file: {0}")]
    Format(String),
}

/// Splits on non-alphanumerics, then on camelCase humps (`HTTPServer` gives
/// `http`, `server`), and lowercases.
pub fn tokenize_code(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for word in text.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()) {
        let chars: Vec<char> = word.chars().collect();
        let mut start = 0;
        for i in 1..chars.len() {
            let (prev, cur) = (chars[i - 1], chars[i]);
            let hump = (prev.is_lowercase() || prev.is_ascii_digit()) && cur.is_uppercase();
            let acronym_end = prev.is_uppercase() && cur.is_uppercase() && chars.get(i + 1).is_some_and(|n| n.is_lowercase());
            if hump || acronym_end {
                out.push(chars[start..i].iter().collect::<String>().to_lowercase());
                start = i;
            }
        }
        out.push(chars[start..].iter().collect::<String>().to_lowercase());
    }
    out
}

/// Anything with a stable id and a text to index.
pub trait Indexable {
    fn doc_id(&self) -> &str;
    fn index_text(&self) -> &str;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievalPair {
    pub id: String,
    pub code_before: String,
    pub code_after: String,
    pub tokens: Vec<String>,
}

impl RetrievalPair {
    pub fn new(id: impl Into<String>, code_before: impl Into<String>, code_after: impl Into<String>) -> Result<Self, RetrievalError> {
        let (id, code_before, code_after) = (id.into(), code_before.into(), code_after.into());
        if code_before == code_after {
            return Err(RetrievalError::IndexError(format!("pair {id}: code_before equals code_after")));
        }
        let tokens = tokenize_code(&code_before);
        Ok(RetrievalPair { id, code_before, code_after, tokens })
    }
}

impl Indexable for RetrievalPair {
    fn doc_id(&self) -> &str {
        &self.id
    }
    fn index_text(&self) -> &str {
        &self.code_before
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.2, b: 0.75 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Bm25Index<D> {
    pub version: u32,
    pub params: Bm25Params,
    /// Sorted by id.
    pub docs: Vec<D>,
    /// term -> (doc position, term frequency), positions ascending.
    pub postings: BTreeMap<String, Vec<(usize, u32)>>,
    pub doc_lengths: Vec<usize>,
    pub avg_doc_length: f64,
}

/// Non-negative IDF variant.
pub fn idf(doc_count: usize, df: usize) -> f64 {
    let (n, df) = (doc_count as f64, df as f64);
    ((n - df + 0.5) / (df + 0.5) + 1.0).ln().max(0.0)
}

impl<D: Indexable> Bm25Index<D> {
    pub fn build(docs: Vec<D>, params: Bm25Params) -> Result<Self, RetrievalError> {
        if docs.is_empty() {
            return Err(RetrievalError::EmptyCorpus);
        }
        let mut docs = docs;
        docs.sort_by(|a, b| a.doc_id().cmp(b.doc_id()));
        if let Some(w) = docs.windows(2).find(|w| w[0].doc_id() == w[1].doc_id()) {
            return Err(RetrievalError::IndexError(format!("duplicate document id `{}`", w[0].doc_id())));
        }
        let mut postings: BTreeMap<String, Vec<(usize, u32)>> = BTreeMap::new();
        let mut doc_lengths = Vec::with_capacity(docs.len());
        for (pos, d) in docs.iter().enumerate() {
            let toks = tokenize_code(d.index_text());
            doc_lengths.push(toks.len());
            let mut tf: BTreeMap<String, u32> = BTreeMap::new();
            for t in toks {
                *tf.entry(t).or_default() += 1;
            }
            for (t, n) in tf {
                postings.entry(t).or_default().push((pos, n));
            }
        }
        let avg_doc_length = doc_lengths.iter().sum::<usize>() as f64 / docs.len() as f64;
        Ok(Bm25Index { version: INDEX_VERSION, params, docs, postings, doc_lengths, avg_doc_length })
    }

    pub fn doc_count(&self) -> usize {
        self.docs.len()
    }

    /// BM25 score of every document, in index order.
    pub fn scores(&self, query: &str) -> Vec<f64> {
        let n = self.docs.len();
        let mut scores = vec![0.0; n];
        let avgdl = if self.avg_doc_length > 0.0 { self.avg_doc_length } else { 1.0 };
        let Bm25Params { k1, b } = self.params;
        let terms: BTreeSet<String> = tokenize_code(query).into_iter().collect();
        for term in terms {
            let Some(list) = self.postings.get(&term) else { continue };
            let w = idf(n, list.len());
            for &(pos, tf) in list {
                let tf = tf as f64;
                let norm = 1.0 - b + b * self.doc_lengths[pos] as f64 / avgdl;
                scores[pos] += w * tf * (k1 + 1.0) / (tf + k1 * norm);
            }
        }
        scores
    }

    /// Top `k` documents by descending score, ties by ascending id.
    pub fn retrieve(&self, query: &str, k: usize) -> Result<Vec<(&D, f64)>, RetrievalError> {
        if self.docs.is_empty() {
            return Err(RetrievalError::EmptyIndex);
        }
        if k == 0 {
            return Err(RetrievalError::InvalidArgument("k must be at least 1".into()));
        }
        let scores = self.scores(query);
        let mut order: Vec<usize> = (0..self.docs.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        Ok(order.into_iter().take(k).map(|i| (&self.docs[i], scores[i])).collect())
    }
}

impl<D: Serialize> Bm25Index<D> {
    pub fn save(&self, path: &Path) -> Result<(), RetrievalError> {
        let json = serde_json::to_string(self).map_err(|e| RetrievalError::Format(e.to_string()))?;
        fs::write(path, json)?;
        Ok(())
    }
}

impl<D: DeserializeOwned> Bm25Index<D> {
    pub fn load(path: &Path) -> Result<Self, RetrievalError> {
        let text = fs::read_to_string(path)?;
        let index: Bm25Index<D> = serde_json::from_str(&text).map_err(|e| RetrievalError::Format(e.to_string()))?;
        if index.version != INDEX_VERSION {
            return Err(RetrievalError::Format(format!("unsupported index version {}", index.version)));
        }
        if index.doc_lengths.len() != index.docs.len() {
            return Err(RetrievalError::Format("doc_lengths do not match docs".into()));
        }
        Ok(index)
    }
}
