use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use super::tokenize::{tokenize_13a, tokenize_char};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChrfConfig {
    pub char_order: usize,
    pub word_order: usize,
    pub beta: f64,
    pub remove_whitespace: bool,
    pub effective_order: bool,
}

impl Default for ChrfConfig {
    fn default() -> Self {
        ChrfConfig {
            char_order: 6,
            word_order: 0,
            beta: 2.0,
            remove_whitespace: true,
            effective_order: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BleuTokenizer {
    #[serde(rename = "13a")]
    ThirteenA,
    Char,
}

impl BleuTokenizer {
    fn name(self) -> &'static str {
        match self {
            BleuTokenizer::ThirteenA => "13a",
            BleuTokenizer::Char => "char",
        }
    }

    fn tokenize(self, text: &str) -> Vec<String> {
        match self {
            BleuTokenizer::ThirteenA => tokenize_13a(text),
            BleuTokenizer::Char => tokenize_char(text),
        }
    }
}

/// Sentence BLEU settings. Zero-match orders are always smoothed
/// exponentially.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BleuConfig {
    pub max_order: usize,
    pub tokenizer: BleuTokenizer,
    pub effective_order: bool,
}

impl Default for BleuConfig {
    fn default() -> Self {
        BleuConfig {
            max_order: 4,
            tokenizer: BleuTokenizer::ThirteenA,
            effective_order: true,
        }
    }
}

fn ngram_counts<T: Eq + Hash>(items: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    if n == 0 || items.len() < n {
        return counts;
    }
    for w in items.windows(n) {
        *counts.entry(w).or_insert(0) += 1;
    }
    counts
}

/// (hypothesis n-grams, reference n-grams, clipped matches)
fn overlap<T: Eq + Hash>(hyp: &[T], reference: &[T], n: usize) -> (usize, usize, usize) {
    let h = ngram_counts(hyp, n);
    let r = ngram_counts(reference, n);
    let matches = h.iter().map(|(g, &c)| c.min(r.get(g).copied().unwrap_or(0))).sum();
    (h.values().sum(), r.values().sum(), matches)
}

const CHRF_PUNCTUATION: &str = "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~";

/// Whitespace split that detaches one leading or trailing punctuation mark
/// from each word (trailing wins).
fn chrf_words(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    for w in text.split_whitespace() {
        let mut chars = w.char_indices();
        let first = chars.next();
        let last = w.char_indices().next_back();
        match (first, last) {
            (Some(_), Some((i, c))) if i > 0 && CHRF_PUNCTUATION.contains(c) => {
                out.push(&w[..i]);
                out.push(&w[i..]);
            }
            (Some((_, c)), Some((i, _))) if i > 0 && CHRF_PUNCTUATION.contains(c) => {
                let split = c.len_utf8();
                out.push(&w[..split]);
                out.push(&w[split..]);
            }
            _ => out.push(w),
        }
    }
    out
}

fn chrf_order_stats(hyp: &str, reference: &str, config: &ChrfConfig) -> Vec<(usize, usize, usize)> {
    let chars = |s: &str| -> Vec<char> {
        if config.remove_whitespace {
            s.chars().filter(|c| !c.is_whitespace()).collect()
        } else {
            s.chars().collect()
        }
    };
    let (hc, rc) = (chars(hyp), chars(reference));
    let mut stats: Vec<_> = (1..=config.char_order).map(|n| overlap(&hc, &rc, n)).collect();
    if config.word_order > 0 {
        let (hw, rw) = (chrf_words(hyp), chrf_words(reference));
        stats.extend((1..=config.word_order).map(|n| overlap(&hw, &rw, n)));
    }
    stats
}

fn f_beta(p: f64, r: f64, beta: f64) -> Option<f64> {
    let b2 = beta * beta;
    let denom = b2 * p + r;
    (denom > 0.0).then(|| (1.0 + b2) * p * r / denom)
}

/// Averaged n-gram precision and recall (fractions in [0, 1]) over the
/// orders where both sides have n-grams.
pub fn chrf_precision_recall(hyp: &str, reference: &str, config: &ChrfConfig) -> (f64, f64) {
    let mut precision = 0.0;
    let mut recall = 0.0;
    let mut orders = 0usize;
    for (n_hyp, n_ref, n_match) in chrf_order_stats(hyp, reference, config) {
        if n_hyp > 0 && n_ref > 0 {
            precision += n_match as f64 / n_hyp as f64;
            recall += n_match as f64 / n_ref as f64;
            orders += 1;
        }
    }
    if orders == 0 {
        return (0.0, 0.0);
    }
    (precision / orders as f64, recall / orders as f64)
}

/// Character n-gram F-score on a 0-100 scale.
///
/// With `effective_order`, precision and recall are averaged over the orders
/// present on both sides before taking the F-score. Without it, per-order
/// F-scores are averaged over all orders, missing statistics counting as a
/// tiny epsilon.
pub fn chrf(hyp: &str, reference: &str, config: &ChrfConfig) -> f64 {
    if config.effective_order {
        let (p, r) = chrf_precision_recall(hyp, reference, config);
        return 100.0 * f_beta(p, r, config.beta).unwrap_or(0.0);
    }
    const EPS: f64 = 1e-16;
    let stats = chrf_order_stats(hyp, reference, config);
    if stats.is_empty() {
        return 0.0;
    }
    let total: f64 = stats
        .iter()
        .map(|&(n_hyp, n_ref, n_match)| {
            let p = if n_hyp > 0 { n_match as f64 / n_hyp as f64 } else { EPS };
            let r = if n_ref > 0 { n_match as f64 / n_ref as f64 } else { EPS };
            f_beta(p, r, config.beta).unwrap_or(EPS)
        })
        .sum();
    100.0 * total / stats.len() as f64
}

/// Sentence-level BLEU on a 0-100 scale.
///
/// The k-th order without any match gets precision `1 / (2^k * n_hyp)`; a
/// hypothesis without a single matching unigram scores 0.
/// Orders beyond the hypothesis length are dropped from the geometric mean
/// under `effective_order`; otherwise they make the score 0.
pub fn sent_bleu(hyp: &str, reference: &str, config: &BleuConfig) -> f64 {
    let h = config.tokenizer.tokenize(hyp);
    let r = config.tokenizer.tokenize(reference);
    if h.is_empty() {
        return 0.0;
    }
    let stats: Vec<_> = (1..=config.max_order).map(|n| overlap(&h, &r, n)).collect();
    if stats.iter().all(|&(_, _, correct)| correct == 0) {
        return 0.0;
    }
    let mut log_sum = 0.0;
    let mut used = 0usize;
    let mut smooth = 1.0;
    for &(total, _, correct) in &stats {
        if total == 0 {
            if config.effective_order {
                break;
            }
            return 0.0;
        }
        let precision = if correct == 0 {
            smooth *= 2.0;
            1.0 / (smooth * total as f64)
        } else {
            correct as f64 / total as f64
        };
        log_sum += precision.ln();
        used += 1;
    }
    let brevity = (1.0 - r.len() as f64 / h.len() as f64).min(0.0).exp();
    100.0 * brevity * (log_sum / used as f64).exp()
}

pub fn chrf_signature(config: &ChrfConfig, version: &str) -> String {
    let mut sig = format!(
        "nrefs:1|case:mixed|eff:{}|nc:{}|nw:{}|space:{}",
        yes_no(config.effective_order),
        config.char_order,
        config.word_order,
        yes_no(!config.remove_whitespace)
    );
    if config.beta != 2.0 {
        sig.push_str(&format!("|beta:{}", config.beta));
    }
    sig.push_str(&format!("|version:{version}"));
    sig
}

pub fn bleu_signature(config: &BleuConfig, version: &str) -> String {
    let mut sig = format!(
        "nrefs:1|case:mixed|eff:{}|tok:{}|smooth:exp",
        yes_no(config.effective_order),
        config.tokenizer.name()
    );
    if config.max_order != 4 {
        sig.push_str(&format!("|order:{}", config.max_order));
    }
    sig.push_str(&format!("|version:{version}"));
    sig
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "metric", rename_all = "snake_case")]
pub enum SurfaceMetric {
    Chrf(ChrfConfig),
    Bleu(BleuConfig),
}

impl SurfaceMetric {
    /// Directed score of `hyp` against `reference`.
    pub fn score(&self, hyp: &str, reference: &str) -> f64 {
        match self {
            SurfaceMetric::Chrf(c) => chrf(hyp, reference, c),
            SurfaceMetric::Bleu(c) => sent_bleu(hyp, reference, c),
        }
    }

    pub fn signature(&self, version: &str) -> String {
        match self {
            SurfaceMetric::Chrf(c) => chrf_signature(c, version),
            SurfaceMetric::Bleu(c) => bleu_signature(c, version),
        }
    }
}

/// Mean of the metric in both directions.
pub fn symmetric_surface(metric: &SurfaceMetric, a: &str, b: &str) -> f64 {
    0.5 * metric.score(a, b) + 0.5 * metric.score(b, a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chrf_examples() {
        let c = ChrfConfig::default();
        assert_eq!(chrf("abc", "abc", &c), 100.0);
        assert!((chrf("abc", "abd", &c) - 38.889).abs() < 1e-2);
        assert_eq!(chrf("abc", "xyz", &c), 0.0);
        assert_eq!(chrf("   ", "abc", &c), 0.0);
    }

    #[test]
    fn chrf_ignores_whitespace_by_default() {
        let c = ChrfConfig::default();
        assert_eq!(chrf("a b c", "abc", &c), 100.0);
        let keep = ChrfConfig {
            remove_whitespace: false,
            ..c
        };
        assert!(chrf("a b c", "abc", &keep) < 100.0);
    }

    #[test]
    fn chrf_precision_recall_swap() {
        let c = ChrfConfig::default();
        let (p, r) = chrf_precision_recall("abcab", "abcba", &c);
        let (p2, r2) = chrf_precision_recall("abcba", "abcab", &c);
        // same length, so both sides cover the same orders
        assert!((p - r2).abs() < 1e-12 && (r - p2).abs() < 1e-12);
    }

    #[test]
    fn chrf_word_orders_count() {
        let c = ChrfConfig {
            word_order: 2,
            ..ChrfConfig::default()
        };
        assert_eq!(chrf("the cat sat", "the cat sat", &c), 100.0);
        // identical once whitespace is removed, but no word matches
        assert_eq!(chrf("the cats", "thec ats", &ChrfConfig::default()), 100.0);
        assert!(chrf("the cats", "thec ats", &c) < 100.0);
    }

    #[test]
    fn bleu_examples() {
        let c = BleuConfig::default();
        assert_eq!(sent_bleu("a b c d", "a b c d", &c), 100.0);
        assert!((sent_bleu("a b", "a b c d", &c) - 36.79).abs() < 0.05);
        assert_eq!(sent_bleu("", "a b", &c), 0.0);
    }

    #[test]
    fn bleu_without_effective_order_zeroes_short_hypotheses() {
        let c = BleuConfig {
            effective_order: false,
            ..BleuConfig::default()
        };
        assert_eq!(sent_bleu("a b", "a b c d", &c), 0.0);
    }

    #[test]
    fn bleu_char_tokenizer() {
        let c = BleuConfig {
            tokenizer: BleuTokenizer::Char,
            ..BleuConfig::default()
        };
        assert_eq!(sent_bleu("猫が好き", "猫が好き", &c), 100.0);
        assert!(sent_bleu("猫が好き", "犬が好き", &c) < 100.0);
    }

    #[test]
    fn signatures_match_published_format() {
        assert_eq!(
            chrf_signature(&ChrfConfig::default(), "2.0.0"),
            "nrefs:1|case:mixed|eff:yes|nc:6|nw:0|space:no|version:2.0.0"
        );
        assert_eq!(
            bleu_signature(&BleuConfig::default(), "2.0.0"),
            "nrefs:1|case:mixed|eff:yes|tok:13a|smooth:exp|version:2.0.0"
        );
        let char_bleu = BleuConfig {
            tokenizer: BleuTokenizer::Char,
            ..BleuConfig::default()
        };
        assert_eq!(
            bleu_signature(&char_bleu, "0.2.0"),
            "nrefs:1|case:mixed|eff:yes|tok:char|smooth:exp|version:0.2.0"
        );
        let chrf1 = ChrfConfig {
            beta: 1.0,
            ..ChrfConfig::default()
        };
        assert!(chrf_signature(&chrf1, "x").contains("|beta:1|"));
    }

    #[test]
    fn symmetric_surface_is_mean_and_swap_invariant() {
        let bleu = SurfaceMetric::Bleu(BleuConfig::default());
        let fwd = bleu.score("a b", "a b c d");
        let bwd = bleu.score("a b c d", "a b");
        assert_eq!(symmetric_surface(&bleu, "a b", "a b c d"), 0.5 * fwd + 0.5 * bwd);
        let chrf = SurfaceMetric::Chrf(ChrfConfig::default());
        assert_eq!(symmetric_surface(&chrf, "same", "same"), 100.0);
        assert_eq!(
            symmetric_surface(&chrf, "kitten", "sitting"),
            symmetric_surface(&chrf, "sitting", "kitten")
        );
    }
}
