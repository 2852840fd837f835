//! A noisy-dictionary translation model whose probabilities can be written
//! down by hand.
//!
//! Every language has `V` words `<prefix>1 ..= <prefix>V`, and word `k` of one
//! language translates to word `k` of any other. For source tokens `s` and
//! target tokens `t` in language `l`:
//!
//! ```text
//! p(t_i | s, i) = 1 - eps          if i <= |s| and t_i == dict_l(s_i)
//!               = eps / (V - 1)    if i <= |s| and t_i != dict_l(s_i)
//!               = 1 / V            if i >  |s|
//! ```
//!
//! Tokens outside the vocabulary are language-neutral and translate to
//! themselves.

use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use super::{check_aligned, BackendHandle, DecodingConfig, EmbeddingBackend, TextEmbedding, TranslationBackend};
use crate::baselines::TokenEmbeddingMatrix;
use crate::error::BackendError;
use crate::measures::TokenScores;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyLanguage {
    pub tag: String,
    pub prefix: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyModelSpec {
    pub vocab_size: u32,
    pub noise: f64,
    pub languages: Vec<ToyLanguage>,
}

impl Default for ToyModelSpec {
    /// V = 10, eps = 0.1, languages L1 (`w`), L2 (`u`), L3 (`v`).
    fn default() -> Self {
        ToyModelSpec {
            vocab_size: 10,
            noise: 0.1,
            languages: [("L1", "w"), ("L2", "u"), ("L3", "v")]
                .into_iter()
                .map(|(tag, prefix)| ToyLanguage {
                    tag: tag.into(),
                    prefix: prefix.into(),
                })
                .collect(),
        }
    }
}

impl ToyModelSpec {
    pub fn new(vocab_size: u32, noise: f64) -> Result<Self, BackendError> {
        let spec = ToyModelSpec {
            vocab_size,
            noise,
            ..ToyModelSpec::default()
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        let v = f64::from(self.vocab_size);
        if self.vocab_size < 2 {
            return Err(BackendError::InvalidRequest(
                "toy vocabulary needs at least 2 words".into(),
            ));
        }
        // the dictionary word must stay the argmax
        if !(self.noise > 0.0 && self.noise < (v - 1.0) / v) {
            return Err(BackendError::InvalidRequest(format!(
                "toy noise {} outside (0, (V-1)/V)",
                self.noise
            )));
        }
        for (i, a) in self.languages.iter().enumerate() {
            for b in &self.languages[i + 1..] {
                if a.tag == b.tag || a.prefix == b.prefix {
                    return Err(BackendError::InvalidRequest(format!(
                        "toy languages {} and {} are not distinct",
                        a.tag, b.tag
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn match_prob(&self) -> f64 {
        1.0 - self.noise
    }

    pub fn mismatch_prob(&self) -> f64 {
        self.noise / f64::from(self.vocab_size - 1)
    }

    pub fn overflow_prob(&self) -> f64 {
        1.0 / f64::from(self.vocab_size)
    }

    fn language(&self, tag: &str) -> Result<&ToyLanguage, BackendError> {
        self.languages
            .iter()
            .find(|l| l.tag == tag)
            .ok_or_else(|| BackendError::UnsupportedLanguage(tag.to_string()))
    }

    /// Vocabulary index of a token, if it belongs to any language.
    fn word_index(&self, token: &str) -> Option<u32> {
        self.languages.iter().find_map(|l| {
            let k: u32 = token.strip_prefix(l.prefix.as_str())?.parse().ok()?;
            // reject forms like "w01" that would not round-trip
            (k >= 1 && k <= self.vocab_size && token.len() == l.prefix.len() + digits(k)).then_some(k)
        })
    }

    fn dictionary(&self, token: &str, lang: &ToyLanguage) -> String {
        match self.word_index(token) {
            Some(k) => format!("{}{k}", lang.prefix),
            None => token.to_string(),
        }
    }

    pub fn translate_text(&self, text: &str, target_lang: &str) -> Result<String, BackendError> {
        let lang = self.language(target_lang)?;
        Ok(text
            .split_whitespace()
            .map(|t| self.dictionary(t, lang))
            .collect::<Vec<_>>()
            .join(" "))
    }

    pub fn token_logprobs(&self, src: &str, tgt: &str, target_lang: &str) -> Result<Vec<f64>, BackendError> {
        let lang = self.language(target_lang)?;
        let src: Vec<&str> = src.split_whitespace().collect();
        Ok(tgt
            .split_whitespace()
            .enumerate()
            .map(|(i, t)| {
                let p = match src.get(i) {
                    Some(s) if self.dictionary(s, lang) == t => self.match_prob(),
                    Some(_) => self.mismatch_prob(),
                    None => self.overflow_prob(),
                };
                p.ln()
            })
            .collect())
    }
}

fn digits(k: u32) -> usize {
    k.to_string().len()
}

/// In-process backend driven by a [`ToyModelSpec`].
#[derive(Debug)]
pub struct ToyBackend {
    spec: ToyModelSpec,
    handle: BackendHandle,
    calls: AtomicUsize,
}

impl Default for ToyBackend {
    fn default() -> Self {
        ToyBackend::new(ToyModelSpec::default()).expect("default toy spec is valid")
    }
}

impl ToyBackend {
    pub fn new(spec: ToyModelSpec) -> Result<Self, BackendError> {
        spec.validate()?;
        let handle = BackendHandle {
            backend_id: "toy".into(),
            model_version: format!("toy-V{}-eps{}", spec.vocab_size, spec.noise),
            decoding: DecodingConfig::default(),
            endpoint: None,
        };
        Ok(ToyBackend {
            spec,
            handle,
            calls: AtomicUsize::new(0),
        })
    }

    pub fn spec(&self) -> &ToyModelSpec {
        &self.spec
    }

    /// Number of translate / score calls served so far.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }
}

impl TranslationBackend for ToyBackend {
    fn handle(&self) -> &BackendHandle {
        &self.handle
    }

    fn translate(&self, texts: &[String], target_lang: &str) -> Result<Vec<String>, BackendError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        texts
            .iter()
            .map(|t| {
                let hyp = self.spec.translate_text(t, target_lang)?;
                if hyp.is_empty() {
                    log::warn!("toy backend produced an empty hypothesis for {t:?}");
                }
                Ok(hyp)
            })
            .collect()
    }

    fn force_decode_score(
        &self,
        src_texts: &[String],
        tgt_texts: &[String],
        target_lang: &str,
    ) -> Result<Vec<TokenScores>, BackendError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        check_aligned(src_texts, tgt_texts)?;
        src_texts
            .iter()
            .zip(tgt_texts)
            .map(|(s, t)| {
                let lps = self.spec.token_logprobs(s, t, target_lang)?;
                TokenScores::new(lps).map_err(|e| BackendError::Protocol(e.to_string()))
            })
            .collect()
    }
}

/// Deterministic embedder for offline runs: each token is a bag of hashed
/// character bigrams.
#[derive(Debug, Clone)]
pub struct ToyEmbedder {
    dim: usize,
}

impl Default for ToyEmbedder {
    fn default() -> Self {
        ToyEmbedder { dim: 32 }
    }
}

impl ToyEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        ToyEmbedder { dim }
    }

    fn token_vector(&self, token: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        let chars: Vec<char> = std::iter::once('^')
            .chain(token.chars())
            .chain(std::iter::once('$'))
            .collect();
        for w in chars.windows(2) {
            // FNV-1a over the two code points
            let mut h: u64 = 0xcbf2_9ce4_8422_2325;
            for c in w {
                for b in (*c as u32).to_le_bytes() {
                    h ^= u64::from(b);
                    h = h.wrapping_mul(0x0000_0100_0000_01b3);
                }
            }
            v[(h % self.dim as u64) as usize] += 1.0;
        }
        v
    }
}

impl EmbeddingBackend for ToyEmbedder {
    fn embedder_id(&self) -> &str {
        "toy-bigram"
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<TextEmbedding>, BackendError> {
        texts
            .iter()
            .map(|text| {
                let rows: Vec<Vec<f64>> = text.split_whitespace().map(|t| self.token_vector(t)).collect();
                let tokens =
                    TokenEmbeddingMatrix::new(rows).map_err(|e| BackendError::InvalidRequest(e.to_string()))?;
                let pooled = tokens.mean_pooled();
                Ok(TextEmbedding { tokens, pooled })
            })
            .collect()
    }
}
