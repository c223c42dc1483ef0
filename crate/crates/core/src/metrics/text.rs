//! Sentence-level BLEU and ROUGE over whitespace-split log templates.

use std::collections::HashMap;

use crate::analysis::normalize_placeholders;

/// Whitespace split after placeholder normalisation; `{}` stays a token.
pub fn template_tokens(template: &str) -> Vec<String> {
    normalize_placeholders(template).split_whitespace().map(str::to_string).collect()
}

fn ngram_counts(toks: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut m = HashMap::new();
    if toks.len() >= n {
        for w in toks.windows(n) {
            *m.entry(w).or_insert(0) += 1;
        }
    }
    m
}

/// Clipped matches and candidate n-gram total.
fn modified_precision(cand: &[String], reference: &[String], n: usize) -> (usize, usize) {
    let c = ngram_counts(cand, n);
    let r = ngram_counts(reference, n);
    let matched = c.iter().map(|(g, k)| (*k).min(r.get(g).copied().unwrap_or(0))).sum();
    (matched, cand.len().saturating_sub(n - 1))
}

/// Uniformly weighted BLEU up to `max_n` with brevity penalty. When any order
/// has zero matches, orders 2 and up use (matches + 1) / (total + 1).
pub fn bleu_tokens(cand: &[String], reference: &[String], max_n: usize) -> f64 {
    assert!((1..=4).contains(&max_n), "max_n must be in 1..=4");
    if cand.is_empty() {
        return if reference.is_empty() { 1.0 } else { 0.0 };
    }
    if reference.is_empty() {
        return 0.0;
    }
    let counts: Vec<(usize, usize)> = (1..=max_n).map(|n| modified_precision(cand, reference, n)).collect();
    let smooth = counts.iter().any(|&(m, _)| m == 0);
    let mut log_sum = 0.0;
    for (i, &(m, total)) in counts.iter().enumerate() {
        let p = if smooth && i > 0 {
            (m as f64 + 1.0) / (total as f64 + 1.0)
        } else if total == 0 {
            0.0
        } else {
            m as f64 / total as f64
        };
        if p == 0.0 {
            return 0.0;
        }
        log_sum += p.ln() / max_n as f64;
    }
    let (c, r) = (cand.len() as f64, reference.len() as f64);
    let bp = if c > r { 1.0 } else { (1.0 - r / c).exp() };
    bp * log_sum.exp()
}

pub fn bleu(candidate: &str, reference: &str, max_n: usize) -> f64 {
    bleu_tokens(&template_tokens(candidate), &template_tokens(reference), max_n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RougeVariant {
    Rouge1,
    RougeL,
}

fn f1(overlap: usize, cand: usize, reference: usize) -> f64 {
    if overlap == 0 {
        return 0.0;
    }
    let p = overlap as f64 / cand as f64;
    let r = overlap as f64 / reference as f64;
    2.0 * p * r / (p + r)
}

pub fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { row[j + 1].max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

pub fn rouge_tokens(cand: &[String], reference: &[String], variant: RougeVariant) -> f64 {
    if cand.is_empty() && reference.is_empty() {
        return 1.0;
    }
    if cand.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let overlap = match variant {
        RougeVariant::Rouge1 => modified_precision(cand, reference, 1).0,
        RougeVariant::RougeL => lcs_len(cand, reference),
    };
    f1(overlap, cand.len(), reference.len())
}

pub fn rouge(candidate: &str, reference: &str, variant: RougeVariant) -> f64 {
    rouge_tokens(&template_tokens(candidate), &template_tokens(reference), variant)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_empty() {
        for n in 1..=4 {
            assert_eq!(bleu("start {} items now", "start {} items now", n), 1.0);
        }
        assert_eq!(bleu("", "start", 4), 0.0);
        assert_eq!(rouge("a b", "a b", RougeVariant::RougeL), 1.0);
        assert_eq!(rouge("a b", "c d", RougeVariant::Rouge1), 0.0);
    }

    #[test]
    fn bleu1_toy_pair() {
        // 3/3 unigrams match; BP = exp(1 - 4/3)
        let got = bleu("start processing items", "start processing all items", 1);
        assert!((got - (1.0f64 - 4.0 / 3.0).exp()).abs() < 1e-12);
    }

    #[test]
    fn smoothing_applies_to_higher_orders_only() {
        // unigrams 2/2, bigrams 0/1 -> (0+1)/(1+1); bp = exp(1 - 3/2)
        let got = bleu("a c", "a b c", 2);
        let want = (1.0f64 - 1.5).exp() * (1.0f64 * 0.5).sqrt();
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn rouge_l_uses_lcs() {
        // LCS("a b c d", "a c d e") = 3
        let got = rouge("a b c d", "a c d e", RougeVariant::RougeL);
        assert!((got - 0.75).abs() < 1e-12);
    }

    #[test]
    fn placeholders_are_tokens() {
        assert_eq!(template_tokens("took %d ms"), ["took", "{}", "ms"]);
    }
}
