//! Translation backends: the contract the measures are written against, a
//! deterministic toy model, an HTTP client for the model server and a
//! persistent request cache.

pub mod cache;
pub mod http;
pub mod toy;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::BackendError;
use crate::measures::TokenScores;

pub use cache::{CacheKey, CacheOperation, CacheValue, CachedBackend, ScoreCache};
pub use http::{HttpBackend, HttpOptions};
pub use toy::{ToyBackend, ToyEmbedder, ToyModelSpec};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum DecodingStrategy {
    Greedy,
    Beam { width: u32 },
    Sample { seed: u64 },
}

/// How translations are generated. Part of every cache key.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DecodingConfig {
    #[serde(flatten)]
    pub strategy: DecodingStrategy,
    pub max_len: u32,
}

impl Default for DecodingConfig {
    fn default() -> Self {
        DecodingConfig {
            strategy: DecodingStrategy::Greedy,
            max_len: 256,
        }
    }
}

impl DecodingConfig {
    pub fn is_default_greedy(&self) -> bool {
        *self == DecodingConfig::default()
    }

    /// Stable textual form, e.g. `greedy|max_len:256`.
    pub fn fingerprint(&self) -> String {
        let strategy = match &self.strategy {
            DecodingStrategy::Greedy => "greedy".to_string(),
            DecodingStrategy::Beam { width } => format!("beam{width}"),
            DecodingStrategy::Sample { seed } => format!("sample{seed}"),
        };
        format!("{strategy}|max_len:{}", self.max_len)
    }
}

impl fmt::Display for DecodingConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.fingerprint())
    }
}

/// Identity of a model endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendHandle {
    pub backend_id: String,
    pub model_version: String,
    pub decoding: DecodingConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
}

/// A multilingual translation model conditioned on the target language.
pub trait TranslationBackend: Send + Sync {
    fn handle(&self) -> &BackendHandle;

    /// One hypothesis per input text, in input order.
    fn translate(&self, texts: &[String], target_lang: &str) -> Result<Vec<String>, BackendError>;

    /// Token log-probabilities of each `tgt` force-decoded from the matching `src`.
    fn force_decode_score(
        &self,
        src_texts: &[String],
        tgt_texts: &[String],
        target_lang: &str,
    ) -> Result<Vec<TokenScores>, BackendError>;
}

impl<T: TranslationBackend + ?Sized> TranslationBackend for &T {
    fn handle(&self) -> &BackendHandle {
        (**self).handle()
    }

    fn translate(&self, texts: &[String], target_lang: &str) -> Result<Vec<String>, BackendError> {
        (**self).translate(texts, target_lang)
    }

    fn force_decode_score(
        &self,
        src_texts: &[String],
        tgt_texts: &[String],
        target_lang: &str,
    ) -> Result<Vec<TokenScores>, BackendError> {
        (**self).force_decode_score(src_texts, tgt_texts, target_lang)
    }
}

impl<T: TranslationBackend + ?Sized> TranslationBackend for Box<T> {
    fn handle(&self) -> &BackendHandle {
        (**self).handle()
    }

    fn translate(&self, texts: &[String], target_lang: &str) -> Result<Vec<String>, BackendError> {
        (**self).translate(texts, target_lang)
    }

    fn force_decode_score(
        &self,
        src_texts: &[String],
        tgt_texts: &[String],
        target_lang: &str,
    ) -> Result<Vec<TokenScores>, BackendError> {
        (**self).force_decode_score(src_texts, tgt_texts, target_lang)
    }
}

impl<T: TranslationBackend + ?Sized> TranslationBackend for Arc<T> {
    fn handle(&self) -> &BackendHandle {
        (**self).handle()
    }

    fn translate(&self, texts: &[String], target_lang: &str) -> Result<Vec<String>, BackendError> {
        (**self).translate(texts, target_lang)
    }

    fn force_decode_score(
        &self,
        src_texts: &[String],
        tgt_texts: &[String],
        target_lang: &str,
    ) -> Result<Vec<TokenScores>, BackendError> {
        (**self).force_decode_score(src_texts, tgt_texts, target_lang)
    }
}

/// Token embeddings of one text plus their mean-pooled vector.
#[derive(Debug, Clone, PartialEq)]
pub struct TextEmbedding {
    pub tokens: crate::baselines::TokenEmbeddingMatrix,
    pub pooled: Vec<f64>,
}

pub trait EmbeddingBackend: Send + Sync {
    fn embedder_id(&self) -> &str;

    fn embed(&self, texts: &[String]) -> Result<Vec<TextEmbedding>, BackendError>;
}

impl<T: EmbeddingBackend + ?Sized> EmbeddingBackend for Arc<T> {
    fn embedder_id(&self) -> &str {
        (**self).embedder_id()
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<TextEmbedding>, BackendError> {
        (**self).embed(texts)
    }
}

pub(crate) fn check_aligned(src: &[String], tgt: &[String]) -> Result<(), BackendError> {
    if src.len() != tgt.len() {
        return Err(BackendError::InvalidRequest(format!(
            "{} source texts but {} target texts",
            src.len(),
            tgt.len()
        )));
    }
    if let Some(i) = tgt.iter().position(|t| t.trim().is_empty()) {
        return Err(BackendError::InvalidRequest(format!("target text {i} is empty")));
    }
    Ok(())
}
