//! The three translation-based similarity measures.
//!
//! All probabilities are handled as length-normalized natural-log values
//! (`mean_i log p_i`) and only exponentiated when a score leaves this module.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::backend::TranslationBackend;
use crate::error::{Error, Result};

/// Two text segments to compare, with optional language tags and gold label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentPair {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub text_a: String,
    pub text_b: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lang_a: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lang_b: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<bool>,
}

impl SegmentPair {
    pub fn new(text_a: impl Into<String>, text_b: impl Into<String>) -> Self {
        SegmentPair {
            id: None,
            text_a: text_a.into(),
            text_b: text_b.into(),
            lang_a: None,
            lang_b: None,
            label: None,
        }
    }

    pub fn with_langs(mut self, lang_a: impl Into<String>, lang_b: impl Into<String>) -> Self {
        self.lang_a = Some(lang_a.into());
        self.lang_b = Some(lang_b.into());
        self
    }

    pub fn with_label(mut self, label: bool) -> Self {
        self.label = Some(label);
        self
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = Some(id.into());
        self
    }

    /// The same pair with A and B exchanged.
    pub fn swapped(&self) -> Self {
        SegmentPair {
            id: self.id.clone(),
            text_a: self.text_b.clone(),
            text_b: self.text_a.clone(),
            lang_a: self.lang_b.clone(),
            lang_b: self.lang_a.clone(),
            label: self.label,
        }
    }
}

/// Token-level log-probabilities of a force-decoded target sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TokenScores {
    token_logprobs: Vec<f64>,
}

impl TokenScores {
    pub fn new(token_logprobs: Vec<f64>) -> Result<Self> {
        if token_logprobs.is_empty() {
            return Err(Error::InvalidInput("token score list is empty".into()));
        }
        if let Some(bad) = token_logprobs.iter().find(|lp| !lp.is_finite() || **lp > 0.0) {
            return Err(Error::InvalidInput(format!(
                "token log-probability {bad} is not in (-inf, 0]"
            )));
        }
        Ok(TokenScores { token_logprobs })
    }

    pub fn token_logprobs(&self) -> &[f64] {
        &self.token_logprobs
    }

    pub fn token_count(&self) -> usize {
        self.token_logprobs.len()
    }

    /// Mean log-probability, i.e. the log of the geometric mean.
    pub fn mean_logprob(&self) -> f64 {
        self.token_logprobs.iter().sum::<f64>() / self.token_logprobs.len() as f64
    }
}

impl TryFrom<Vec<f64>> for TokenScores {
    type Error = Error;

    fn try_from(value: Vec<f64>) -> Result<Self> {
        TokenScores::new(value)
    }
}

impl From<TokenScores> for Vec<f64> {
    fn from(value: TokenScores) -> Self {
        value.token_logprobs
    }
}

/// `(prod_i p_i)^(1/n)`, evaluated in log space.
pub fn length_normalized_prob(scores: &TokenScores) -> f64 {
    scores.mean_logprob().exp()
}

/// Which translation probability a measure is built on.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "measure", rename_all = "snake_case")]
pub enum Measure {
    Direct,
    Pivot { pivot_lang: String },
    Cross { target_lang: String },
}

impl Measure {
    pub fn name(&self) -> &'static str {
        match self {
            Measure::Direct => "direct",
            Measure::Pivot { .. } => "pivot",
            Measure::Cross { .. } => "cross",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreDirection {
    /// sim(A|B)
    AGivenB,
    /// sim(B|A)
    BGivenA,
    /// Mean of both directed scores.
    Symmetric,
}

impl ScoreDirection {
    fn signature_label(self) -> &'static str {
        match self {
            ScoreDirection::AGivenB => "a-given-b",
            ScoreDirection::BGivenA => "b-given-a",
            ScoreDirection::Symmetric => "both-directions",
        }
    }
}

impl fmt::Display for ScoreDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.signature_label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MeasureConfig {
    #[serde(flatten)]
    pub measure: Measure,
    pub normalized: bool,
    pub direction: ScoreDirection,
    pub backend_id: String,
}

impl MeasureConfig {
    pub fn direct(backend_id: impl Into<String>) -> Self {
        MeasureConfig {
            measure: Measure::Direct,
            normalized: true,
            direction: ScoreDirection::Symmetric,
            backend_id: backend_id.into(),
        }
    }

    pub fn pivot(backend_id: impl Into<String>, pivot_lang: impl Into<String>) -> Self {
        MeasureConfig {
            measure: Measure::Pivot {
                pivot_lang: pivot_lang.into(),
            },
            ..Self::direct(backend_id)
        }
    }

    pub fn cross(backend_id: impl Into<String>, target_lang: impl Into<String>) -> Self {
        MeasureConfig {
            measure: Measure::Cross {
                target_lang: target_lang.into(),
            },
            ..Self::direct(backend_id)
        }
    }

    pub fn normalized(mut self, normalized: bool) -> Self {
        self.normalized = normalized;
        self
    }

    pub fn direction(mut self, direction: ScoreDirection) -> Self {
        self.direction = direction;
        self
    }

    pub fn is_symmetric(&self) -> bool {
        self.direction == ScoreDirection::Symmetric
    }

    pub fn pivot_lang(&self) -> Option<&str> {
        match &self.measure {
            Measure::Pivot { pivot_lang } => Some(pivot_lang),
            _ => None,
        }
    }

    pub fn target_lang(&self) -> Option<&str> {
        match &self.measure {
            Measure::Cross { target_lang } => Some(target_lang),
            _ => None,
        }
    }
}

/// A generated translation that a score depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub source: String,
    pub target_lang: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityScore {
    pub value: f64,
    pub direction: ScoreDirection,
    /// sim(A|B), when it was computed.
    pub a_given_b: Option<f64>,
    /// sim(B|A), when it was computed.
    pub b_given_a: Option<f64>,
    pub hypotheses: Vec<Hypothesis>,
    pub config: MeasureConfig,
}

/// Builds the pipe-delimited signature identifying a measure configuration.
///
/// `backend_stack_version` names the software stack serving the model (e.g.
/// `hf4.17.0`); pass `none` for backends without one. A non-greedy decoding
/// strategy is appended as a trailing `decoding:` field.
pub fn version_signature(config: &MeasureConfig, backend_stack_version: &str, tool_version: &str) -> String {
    version_signature_with_decoding(config, backend_stack_version, tool_version, None)
}

pub fn version_signature_with_decoding(
    config: &MeasureConfig,
    backend_stack_version: &str,
    tool_version: &str,
    decoding: Option<&crate::backend::DecodingConfig>,
) -> String {
    let mut fields = vec![format!("NMTScore-{}", config.measure.name())];
    match &config.measure {
        Measure::Direct => {}
        Measure::Pivot { pivot_lang } => fields.push(format!("pivot-lang:{pivot_lang}")),
        Measure::Cross { target_lang } => fields.push(format!("tgt-lang:{target_lang}")),
    }
    fields.push(format!("model:{}", config.backend_id));
    fields.push(
        if config.normalized {
            "normalized"
        } else {
            "unnormalized"
        }
        .to_string(),
    );
    fields.push(config.direction.signature_label().to_string());
    fields.push(tool_version.to_string());
    fields.push(backend_stack_version.to_string());
    if let Some(decoding) = decoding.filter(|d| !d.is_default_greedy()) {
        fields.push(format!("decoding:{}", decoding.fingerprint()));
    }
    fields.join("|")
}

/// Scores one pair with the direct translation probability.
pub fn score_direct(
    pair: &SegmentPair,
    config: &MeasureConfig,
    backend: &dyn TranslationBackend,
) -> Result<SimilarityScore> {
    expect_measure(config, "direct")?;
    score(pair, config, backend)
}

/// Scores one pair with the pivot translation probability.
pub fn score_pivot(
    pair: &SegmentPair,
    config: &MeasureConfig,
    backend: &dyn TranslationBackend,
) -> Result<SimilarityScore> {
    expect_measure(config, "pivot")?;
    score(pair, config, backend)
}

/// Scores one pair with translation cross-likelihood. Language tags of the
/// pair are not consulted.
pub fn score_cross(
    pair: &SegmentPair,
    config: &MeasureConfig,
    backend: &dyn TranslationBackend,
) -> Result<SimilarityScore> {
    expect_measure(config, "cross")?;
    score(pair, config, backend)
}

fn expect_measure(config: &MeasureConfig, name: &str) -> Result<()> {
    if config.measure.name() != name {
        return Err(Error::Config(format!(
            "expected a {name} measure configuration, got {}",
            config.measure.name()
        )));
    }
    Ok(())
}

/// Scores a single pair with whichever measure `config` selects.
pub fn score(pair: &SegmentPair, config: &MeasureConfig, backend: &dyn TranslationBackend) -> Result<SimilarityScore> {
    let mut scores = score_pairs(std::slice::from_ref(pair), config, backend)?;
    Ok(scores.remove(0))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct TranslateRequest {
    text: String,
    lang: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct ForceDecodeRequest {
    src: String,
    tgt: String,
    lang: String,
}

/// Numerator and optional denominator of one directed score.
struct DirectedPlan {
    numerator: ForceDecodeRequest,
    denominator: Option<ForceDecodeRequest>,
}

/// Deduplicating request list; the index of a request is stable.
struct RequestSet<K> {
    index: HashMap<K, usize>,
    items: Vec<K>,
}

impl<K: Clone + Eq + std::hash::Hash> RequestSet<K> {
    fn new() -> Self {
        RequestSet {
            index: HashMap::new(),
            items: Vec::new(),
        }
    }

    fn insert(&mut self, key: K) -> usize {
        if let Some(&i) = self.index.get(&key) {
            return i;
        }
        let i = self.items.len();
        self.index.insert(key.clone(), i);
        self.items.push(key);
        i
    }

    fn get(&self, key: &K) -> usize {
        self.index[key]
    }
}

/// Scores a batch of pairs. Backend requests are deduplicated and grouped by
/// language; results come back in input order.
///
/// Requests that are identical within the batch are sent once, so a
/// numerator and a denominator that coincide produce a ratio of exactly 1.
pub fn score_pairs(
    pairs: &[SegmentPair],
    config: &MeasureConfig,
    backend: &dyn TranslationBackend,
) -> Result<Vec<SimilarityScore>> {
    for pair in pairs {
        validate_pair(pair, config)?;
    }

    let directions = directed_sides(config.direction);

    // Translations first: B' (and A') per pair.
    let mut translations = RequestSet::new();
    for pair in pairs {
        for &(x, y) in &directions {
            let (tx, ty) = sides(pair, x, y);
            match &config.measure {
                Measure::Direct => {}
                Measure::Pivot { pivot_lang } => {
                    translations.insert(TranslateRequest {
                        text: ty.to_string(),
                        lang: pivot_lang.clone(),
                    });
                    if config.normalized {
                        translations.insert(TranslateRequest {
                            text: tx.to_string(),
                            lang: pivot_lang.clone(),
                        });
                    }
                }
                Measure::Cross { target_lang } => {
                    translations.insert(TranslateRequest {
                        text: ty.to_string(),
                        lang: target_lang.clone(),
                    });
                }
            }
        }
    }
    let hypotheses = run_translations(&translations.items, backend)?;
    let translated = |text: &str, lang: &str| -> &str {
        &hypotheses[translations.get(&TranslateRequest {
            text: text.to_string(),
            lang: lang.to_string(),
        })]
    };

    // Then the force-decoding requests for every directed score.
    let mut decodes = RequestSet::new();
    let mut plans: Vec<Vec<DirectedPlan>> = Vec::with_capacity(pairs.len());
    for pair in pairs {
        let mut pair_plans = Vec::with_capacity(directions.len());
        for &(x, y) in &directions {
            let (tx, ty) = sides(pair, x, y);
            let lang_x = side_lang(pair, x);
            let plan = match &config.measure {
                Measure::Direct => {
                    let lang = lang_x.expect("validated").to_string();
                    DirectedPlan {
                        numerator: ForceDecodeRequest {
                            src: ty.to_string(),
                            tgt: tx.to_string(),
                            lang: lang.clone(),
                        },
                        denominator: config.normalized.then(|| ForceDecodeRequest {
                            src: tx.to_string(),
                            tgt: tx.to_string(),
                            lang,
                        }),
                    }
                }
                Measure::Pivot { pivot_lang } => {
                    let lang = lang_x.expect("validated").to_string();
                    DirectedPlan {
                        numerator: ForceDecodeRequest {
                            src: translated(ty, pivot_lang).to_string(),
                            tgt: tx.to_string(),
                            lang: lang.clone(),
                        },
                        denominator: config.normalized.then(|| ForceDecodeRequest {
                            src: translated(tx, pivot_lang).to_string(),
                            tgt: tx.to_string(),
                            lang,
                        }),
                    }
                }
                Measure::Cross { target_lang } => {
                    let y_prime = translated(ty, target_lang).to_string();
                    DirectedPlan {
                        numerator: ForceDecodeRequest {
                            src: tx.to_string(),
                            tgt: y_prime.clone(),
                            lang: target_lang.clone(),
                        },
                        denominator: config.normalized.then(|| ForceDecodeRequest {
                            src: ty.to_string(),
                            tgt: y_prime,
                            lang: target_lang.clone(),
                        }),
                    }
                }
            };
            decodes.insert(plan.numerator.clone());
            if let Some(den) = &plan.denominator {
                decodes.insert(den.clone());
            }
            pair_plans.push(plan);
        }
        plans.push(pair_plans);
    }
    let log_probs = run_force_decodes(&decodes.items, backend)?;

    let mut out = Vec::with_capacity(pairs.len());
    for (pair, pair_plans) in pairs.iter().zip(&plans) {
        let directed: Vec<f64> = pair_plans
            .iter()
            .map(|plan| {
                let num = log_probs[decodes.get(&plan.numerator)];
                let log_ratio = match &plan.denominator {
                    Some(den) => num - log_probs[decodes.get(den)],
                    None => num,
                };
                log_ratio.exp()
            })
            .collect();
        let (value, a_given_b, b_given_a) = match config.direction {
            ScoreDirection::AGivenB => (directed[0], Some(directed[0]), None),
            ScoreDirection::BGivenA => (directed[0], None, Some(directed[0])),
            ScoreDirection::Symmetric => (
                0.5 * directed[0] + 0.5 * directed[1],
                Some(directed[0]),
                Some(directed[1]),
            ),
        };
        out.push(SimilarityScore {
            value,
            direction: config.direction,
            a_given_b,
            b_given_a,
            hypotheses: pair_hypotheses(pair, config, &translations, &hypotheses),
            config: config.clone(),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    A,
    B,
}

/// (X, Y) for each directed score sim(X|Y) the direction needs.
fn directed_sides(direction: ScoreDirection) -> Vec<(Side, Side)> {
    match direction {
        ScoreDirection::AGivenB => vec![(Side::A, Side::B)],
        ScoreDirection::BGivenA => vec![(Side::B, Side::A)],
        ScoreDirection::Symmetric => vec![(Side::A, Side::B), (Side::B, Side::A)],
    }
}

fn side_text(pair: &SegmentPair, side: Side) -> &str {
    match side {
        Side::A => &pair.text_a,
        Side::B => &pair.text_b,
    }
}

fn side_lang(pair: &SegmentPair, side: Side) -> Option<&str> {
    match side {
        Side::A => pair.lang_a.as_deref(),
        Side::B => pair.lang_b.as_deref(),
    }
}

fn sides(pair: &SegmentPair, x: Side, y: Side) -> (&str, &str) {
    (side_text(pair, x), side_text(pair, y))
}

fn validate_pair(pair: &SegmentPair, config: &MeasureConfig) -> Result<()> {
    for (name, text) in [("text_a", &pair.text_a), ("text_b", &pair.text_b)] {
        if text.split_whitespace().next().is_none() {
            return Err(Error::InvalidInput(format!(
                "{name} of pair {} has no tokens",
                pair.id.as_deref().unwrap_or("<unnamed>")
            )));
        }
    }
    if let Measure::Cross { .. } = config.measure {
        return Ok(());
    }
    for (x, _) in directed_sides(config.direction) {
        if side_lang(pair, x).is_none() {
            let tag = if x == Side::A { "lang_a" } else { "lang_b" };
            return Err(Error::Config(format!(
                "{} measure needs {tag} for pair {}",
                config.measure.name(),
                pair.id.as_deref().unwrap_or("<unnamed>")
            )));
        }
    }
    Ok(())
}

fn pair_hypotheses(
    pair: &SegmentPair,
    config: &MeasureConfig,
    translations: &RequestSet<TranslateRequest>,
    hypotheses: &[String],
) -> Vec<Hypothesis> {
    let lang = match &config.measure {
        Measure::Direct => return Vec::new(),
        Measure::Pivot { pivot_lang } => pivot_lang,
        Measure::Cross { target_lang } => target_lang,
    };
    let mut out = Vec::new();
    for text in [&pair.text_a, &pair.text_b] {
        let key = TranslateRequest {
            text: text.clone(),
            lang: lang.clone(),
        };
        if let Some(&i) = translations.index.get(&key) {
            if !out.iter().any(|h: &Hypothesis| h.source == *text) {
                out.push(Hypothesis {
                    source: text.clone(),
                    target_lang: lang.clone(),
                    text: hypotheses[i].clone(),
                });
            }
        }
    }
    out
}

fn group_by_lang<K>(items: &[K], lang: impl Fn(&K) -> &str) -> Vec<(String, Vec<usize>)> {
    let mut groups: Vec<(String, Vec<usize>)> = Vec::new();
    for (i, item) in items.iter().enumerate() {
        let l = lang(item);
        match groups.iter_mut().find(|(g, _)| g == l) {
            Some((_, members)) => members.push(i),
            None => groups.push((l.to_string(), vec![i])),
        }
    }
    groups
}

fn run_translations(requests: &[TranslateRequest], backend: &dyn TranslationBackend) -> Result<Vec<String>> {
    let mut out = vec![String::new(); requests.len()];
    for (lang, members) in group_by_lang(requests, |r| &r.lang) {
        let texts: Vec<String> = members.iter().map(|&i| requests[i].text.clone()).collect();
        let hyps = backend.translate(&texts, &lang)?;
        if hyps.len() != texts.len() {
            return Err(crate::BackendError::Protocol(format!(
                "{} translations returned for {} inputs",
                hyps.len(),
                texts.len()
            ))
            .into());
        }
        for (&i, hyp) in members.iter().zip(hyps) {
            if hyp.split_whitespace().next().is_none() {
                return Err(Error::DegenerateTranslation {
                    source_text: requests[i].text.clone(),
                    lang: lang.clone(),
                });
            }
            out[i] = hyp;
        }
    }
    Ok(out)
}

fn run_force_decodes(requests: &[ForceDecodeRequest], backend: &dyn TranslationBackend) -> Result<Vec<f64>> {
    let mut out = vec![0.0; requests.len()];
    for (lang, members) in group_by_lang(requests, |r| &r.lang) {
        let src: Vec<String> = members.iter().map(|&i| requests[i].src.clone()).collect();
        let tgt: Vec<String> = members.iter().map(|&i| requests[i].tgt.clone()).collect();
        let scores = backend.force_decode_score(&src, &tgt, &lang)?;
        if scores.len() != src.len() {
            return Err(crate::BackendError::Protocol(format!(
                "{} score lists returned for {} pairs",
                scores.len(),
                src.len()
            ))
            .into());
        }
        for (&i, s) in members.iter().zip(scores) {
            out[i] = s.mean_logprob();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::toy::ToyBackend;

    fn toy() -> ToyBackend {
        ToyBackend::default()
    }

    fn mono(a: &str, b: &str) -> SegmentPair {
        SegmentPair::new(a, b).with_langs("L1", "L1")
    }

    #[test]
    fn geometric_mean_examples() {
        let ln = f64::ln;
        let s = TokenScores::new(vec![ln(0.9); 3]).unwrap();
        assert!((length_normalized_prob(&s) - 0.9).abs() < 1e-12);
        let s = TokenScores::new(vec![0.0]).unwrap();
        assert_eq!(length_normalized_prob(&s), 1.0);
        let s = TokenScores::new(vec![ln(0.9), ln(0.9), ln(0.1 / 9.0)]).unwrap();
        assert!((length_normalized_prob(&s) - 0.20801).abs() < 1e-5);
    }

    #[test]
    fn empty_or_positive_logprobs_rejected() {
        assert!(matches!(TokenScores::new(vec![]), Err(Error::InvalidInput(_))));
        assert!(TokenScores::new(vec![-0.1, 0.2]).is_err());
        assert!(TokenScores::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn long_sequence_does_not_underflow() {
        let s = TokenScores::new(vec![(1e-6f64).ln(); 1000]).unwrap();
        assert_eq!(s.token_count(), 1000);
        assert!((length_normalized_prob(&s) - 1e-6).abs() < 1e-12);
    }

    #[test]
    fn direct_examples() {
        let b = toy();
        let cfg = MeasureConfig::direct("toy");
        let s = score_direct(&mono("w1 w2 w3", "w1 w2 w3"), &cfg, &b).unwrap();
        assert_eq!(s.value, 1.0);
        let s = score_direct(&mono("w1 w2 w3", "w1 w2 w4"), &cfg, &b).unwrap();
        assert!((s.value - 0.23112).abs() < 1e-4);
        let cfg = cfg.normalized(false);
        let s = score_direct(&mono("w1 w2 w3", "w1 w2 w4"), &cfg, &b).unwrap();
        assert!((s.value - 0.20801).abs() < 1e-4);
    }

    #[test]
    fn pivot_examples() {
        let b = toy();
        let cfg = MeasureConfig::pivot("toy", "L2");
        let s = score_pivot(&mono("w1 w2 w3", "w1 w2 w3"), &cfg, &b).unwrap();
        assert_eq!(s.value, 1.0);
        let s = score_pivot(&mono("w1 w2 w3", "w1 w2 w4"), &cfg, &b).unwrap();
        assert!((s.value - 0.23112).abs() < 1e-4);
        let s = score_pivot(&mono("w1", "w1"), &cfg.normalized(false), &b).unwrap();
        assert!((s.value - 0.9).abs() < 1e-6);
    }

    #[test]
    fn cross_examples() {
        let b = toy();
        let cfg = MeasureConfig::cross("toy", "L2");
        let s = score_cross(&mono("w1 w2 w3", "w1 w2 w3"), &cfg, &b).unwrap();
        assert_eq!(s.value, 1.0);
        let s = score_cross(&mono("w1 w2 w3", "w1 w2 w4"), &cfg, &b).unwrap();
        assert!((s.value - 0.23112).abs() < 1e-4);
        let s = score_cross(&mono("w1 w2", "w5 w6"), &cfg, &b).unwrap();
        assert!((s.value - 0.01235).abs() < 1e-4);
        assert_eq!(s.hypotheses.len(), 2);
    }

    #[test]
    fn cross_ignores_language_tags() {
        let b = toy();
        let cfg = MeasureConfig::cross("toy", "L2");
        let tagged = score_cross(&mono("w1 w2 w3", "w3 w2 w4"), &cfg, &b).unwrap();
        let bare = score_cross(&SegmentPair::new("w1 w2 w3", "w3 w2 w4"), &cfg, &b).unwrap();
        assert_eq!(tagged.value, bare.value);
    }

    #[test]
    fn missing_language_is_config_error() {
        let b = toy();
        let pair = SegmentPair::new("w1", "w2");
        let err = score_direct(&pair, &MeasureConfig::direct("toy"), &b).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        // a-given-b only needs lang_a
        let mut pair = pair;
        pair.lang_a = Some("L1".into());
        let cfg = MeasureConfig::direct("toy").direction(ScoreDirection::AGivenB);
        assert!(score_direct(&pair, &cfg, &b).is_ok());
        let cfg = MeasureConfig::pivot("toy", "L2").direction(ScoreDirection::BGivenA);
        assert!(matches!(score_pivot(&pair, &cfg, &b), Err(Error::Config(_))));
    }

    #[test]
    fn measure_mismatch_is_config_error() {
        let b = toy();
        let err = score_pivot(&mono("w1", "w1"), &MeasureConfig::direct("toy"), &b).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn blank_segment_rejected_before_backend() {
        let b = toy();
        let err = score_direct(&mono("   ", "w1"), &MeasureConfig::direct("toy"), &b).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
        assert_eq!(b.calls(), 0);
    }

    #[test]
    fn symmetric_is_mean_of_directions() {
        let b = toy();
        for cfg in [
            MeasureConfig::direct("toy"),
            MeasureConfig::pivot("toy", "L2"),
            MeasureConfig::cross("toy", "L3"),
        ] {
            let s = score(&mono("w1 w2", "w2 w2 w5"), &cfg, &b).unwrap();
            assert_eq!(s.value, 0.5 * (s.a_given_b.unwrap() + s.b_given_a.unwrap()));
            let ab = score(
                &mono("w1 w2", "w2 w2 w5"),
                &cfg.clone().direction(ScoreDirection::AGivenB),
                &b,
            )
            .unwrap();
            let ba = score(
                &mono("w1 w2", "w2 w2 w5"),
                &cfg.clone().direction(ScoreDirection::BGivenA),
                &b,
            )
            .unwrap();
            assert_eq!(ab.value, s.a_given_b.unwrap());
            assert_eq!(ba.value, s.b_given_a.unwrap());
        }
    }

    #[test]
    fn signatures() {
        let cfg = MeasureConfig::direct("prism");
        assert_eq!(
            version_signature(&cfg, "hf4.17.0", "v0.2.0"),
            "NMTScore-direct|model:prism|normalized|both-directions|v0.2.0|hf4.17.0"
        );
        let cfg = MeasureConfig::cross("prism", "en");
        assert_eq!(
            version_signature(&cfg, "hf4.17.0", "v0.2.0"),
            "NMTScore-cross|tgt-lang:en|model:prism|normalized|both-directions|v0.2.0|hf4.17.0"
        );
        let cfg = MeasureConfig::pivot("prism", "en");
        assert_eq!(
            version_signature(&cfg, "hf4.17.0", "v0.2.0"),
            "NMTScore-pivot|pivot-lang:en|model:prism|normalized|both-directions|v0.2.0|hf4.17.0"
        );
        let cfg = MeasureConfig::direct("toy")
            .normalized(false)
            .direction(ScoreDirection::AGivenB);
        assert_eq!(
            version_signature(&cfg, "none", "v0.2.0"),
            "NMTScore-direct|model:toy|unnormalized|a-given-b|v0.2.0|none"
        );
    }

    #[test]
    fn beam_decoding_is_recorded_in_signature() {
        use crate::backend::{DecodingConfig, DecodingStrategy};
        let cfg = MeasureConfig::pivot("prism", "en");
        let beam = DecodingConfig {
            strategy: DecodingStrategy::Beam { width: 4 },
            ..DecodingConfig::default()
        };
        let sig = version_signature_with_decoding(&cfg, "hf4.17.0", "v0.2.0", Some(&beam));
        assert!(sig.ends_with("|hf4.17.0|decoding:beam4|max_len:256"), "{sig}");
        let greedy = DecodingConfig::default();
        assert_eq!(
            version_signature_with_decoding(&cfg, "hf4.17.0", "v0.2.0", Some(&greedy)),
            version_signature(&cfg, "hf4.17.0", "v0.2.0")
        );
    }

    #[test]
    fn config_serializes_flat() {
        let cfg = MeasureConfig::pivot("toy", "en");
        let json = serde_json::to_value(&cfg).unwrap();
        assert_eq!(json["measure"], "pivot");
        assert_eq!(json["pivot_lang"], "en");
        let back: MeasureConfig = serde_json::from_value(json).unwrap();
        assert_eq!(back, cfg);
    }
}
