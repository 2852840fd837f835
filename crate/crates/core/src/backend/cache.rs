//! Persistent translation / score cache.
//!
//! Records live in `<root>/<backend_id>/cache.jsonl`, one JSON object per
//! line. The file is only ever appended to; when a key occurs twice the later
//! line wins. Lines that fail to parse are skipped with a warning.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};

use super::{BackendHandle, TranslationBackend};
use crate::error::BackendError;
use crate::measures::TokenScores;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CacheOperation {
    Translate,
    Score,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CacheKey {
    pub backend_id: String,
    pub operation: CacheOperation,
    pub target_lang: String,
    pub source_text: String,
    /// Empty for translations.
    pub target_text: String,
    pub decoding: String,
}

impl CacheKey {
    pub fn translate(handle: &BackendHandle, target_lang: &str, source: &str) -> Self {
        CacheKey {
            backend_id: handle.backend_id.clone(),
            operation: CacheOperation::Translate,
            target_lang: target_lang.to_string(),
            source_text: source.to_string(),
            target_text: String::new(),
            decoding: handle.decoding.fingerprint(),
        }
    }

    pub fn score(handle: &BackendHandle, target_lang: &str, source: &str, target: &str) -> Self {
        CacheKey {
            backend_id: handle.backend_id.clone(),
            operation: CacheOperation::Score,
            target_lang: target_lang.to_string(),
            source_text: source.to_string(),
            target_text: target.to_string(),
            decoding: handle.decoding.fingerprint(),
        }
    }

    /// Canonical byte form (compact JSON, fixed field order).
    pub fn to_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("cache keys always serialize")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CacheValue {
    Translation(String),
    TokenLogprobs(Vec<f64>),
}

#[derive(Serialize, Deserialize)]
struct CacheRecord {
    key: CacheKey,
    value: CacheValue,
}

/// Key-value store shared by every handle on the same directory.
#[derive(Debug, Default)]
pub struct ScoreCache {
    entries: RwLock<HashMap<CacheKey, CacheValue>>,
    writer: Option<Mutex<File>>,
    path: Option<PathBuf>,
}

impl ScoreCache {
    pub fn in_memory() -> Self {
        ScoreCache::default()
    }

    /// Opens (or creates) the cache for `backend_id` below `root`.
    pub fn open(root: &Path, backend_id: &str) -> std::io::Result<Self> {
        let dir = root.join(sanitize(backend_id));
        fs::create_dir_all(&dir)?;
        let path = dir.join("cache.jsonl");
        let mut entries = HashMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(&path)?);
            for (lineno, line) in reader.lines().enumerate() {
                let line = match line {
                    Ok(l) => l,
                    Err(e) => {
                        log::warn!("{}:{}: unreadable cache line skipped: {e}", path.display(), lineno + 1);
                        continue;
                    }
                };
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<CacheRecord>(&line) {
                    Ok(rec) => {
                        entries.insert(rec.key, rec.value);
                    }
                    Err(e) => log::warn!("{}:{}: corrupt cache line skipped: {e}", path.display(), lineno + 1),
                }
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(ScoreCache {
            entries: RwLock::new(entries),
            writer: Some(Mutex::new(file)),
            path: Some(path),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn lookup(&self, key: &CacheKey) -> Option<CacheValue> {
        self.entries.read().expect("cache lock poisoned").get(key).cloned()
    }

    pub fn store(&self, key: CacheKey, value: CacheValue) -> std::io::Result<()> {
        if let Some(writer) = &self.writer {
            let mut line = serde_json::to_vec(&CacheRecord {
                key: key.clone(),
                value: value.clone(),
            })
            .map_err(std::io::Error::other)?;
            line.push(b'\n');
            // one write per record so concurrent processes never interleave lines
            writer.lock().expect("cache writer poisoned").write_all(&line)?;
        }
        self.entries.write().expect("cache lock poisoned").insert(key, value);
        Ok(())
    }
}

fn sanitize(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "-_.".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Wraps a backend so that every translate / score request goes through a
/// [`ScoreCache`]. Only cache misses reach the inner backend.
pub struct CachedBackend<B> {
    inner: B,
    cache: Arc<ScoreCache>,
}

impl<B: TranslationBackend> CachedBackend<B> {
    pub fn new(inner: B, cache: Arc<ScoreCache>) -> Self {
        CachedBackend { inner, cache }
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }

    pub fn cache(&self) -> &ScoreCache {
        &self.cache
    }

    fn persist(&self, key: CacheKey, value: CacheValue) {
        if let Err(e) = self.cache.store(key, value) {
            log::warn!("failed to persist cache record: {e}");
        }
    }
}

impl<B: TranslationBackend> TranslationBackend for CachedBackend<B> {
    fn handle(&self) -> &BackendHandle {
        self.inner.handle()
    }

    fn translate(&self, texts: &[String], target_lang: &str) -> Result<Vec<String>, BackendError> {
        let handle = self.inner.handle();
        let mut out: Vec<Option<String>> = Vec::with_capacity(texts.len());
        let mut missing = Vec::new();
        for (i, text) in texts.iter().enumerate() {
            match self.cache.lookup(&CacheKey::translate(handle, target_lang, text)) {
                Some(CacheValue::Translation(t)) => out.push(Some(t)),
                _ => {
                    out.push(None);
                    missing.push(i);
                }
            }
        }
        if !missing.is_empty() {
            let batch: Vec<String> = missing.iter().map(|&i| texts[i].clone()).collect();
            let fresh = self.inner.translate(&batch, target_lang)?;
            if fresh.len() != batch.len() {
                return Err(BackendError::Protocol(format!(
                    "{} translations returned for {} inputs",
                    fresh.len(),
                    batch.len()
                )));
            }
            for (&i, hyp) in missing.iter().zip(fresh) {
                self.persist(
                    CacheKey::translate(handle, target_lang, &texts[i]),
                    CacheValue::Translation(hyp.clone()),
                );
                out[i] = Some(hyp);
            }
        }
        Ok(out.into_iter().map(|t| t.expect("filled above")).collect())
    }

    fn force_decode_score(
        &self,
        src_texts: &[String],
        tgt_texts: &[String],
        target_lang: &str,
    ) -> Result<Vec<TokenScores>, BackendError> {
        super::check_aligned(src_texts, tgt_texts)?;
        let handle = self.inner.handle();
        let mut out: Vec<Option<TokenScores>> = Vec::with_capacity(src_texts.len());
        let mut missing = Vec::new();
        for (i, (s, t)) in src_texts.iter().zip(tgt_texts).enumerate() {
            let cached = match self.cache.lookup(&CacheKey::score(handle, target_lang, s, t)) {
                Some(CacheValue::TokenLogprobs(lps)) => TokenScores::new(lps).ok(),
                _ => None,
            };
            if cached.is_none() {
                missing.push(i);
            }
            out.push(cached);
        }
        if !missing.is_empty() {
            let src: Vec<String> = missing.iter().map(|&i| src_texts[i].clone()).collect();
            let tgt: Vec<String> = missing.iter().map(|&i| tgt_texts[i].clone()).collect();
            let fresh = self.inner.force_decode_score(&src, &tgt, target_lang)?;
            if fresh.len() != src.len() {
                return Err(BackendError::Protocol(format!(
                    "{} score lists returned for {} pairs",
                    fresh.len(),
                    src.len()
                )));
            }
            for (&i, scores) in missing.iter().zip(fresh) {
                self.persist(
                    CacheKey::score(handle, target_lang, &src_texts[i], &tgt_texts[i]),
                    CacheValue::TokenLogprobs(scores.token_logprobs().to_vec()),
                );
                out[i] = Some(scores);
            }
        }
        Ok(out.into_iter().map(|s| s.expect("filled above")).collect())
    }
}
