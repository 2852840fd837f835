//! Client for the model server's JSON protocol.
//!
//! ```text
//! POST /translate {texts, tgt_lang, decoding}       -> {translations, model_version}
//! POST /score     {src_texts, tgt_texts, tgt_lang}  -> {token_logprobs, model_version}
//! POST /embed     {texts}                           -> {token_embeddings, pooled}
//! GET  /health                                      -> {status, model_version, languages}
//! ```
//!
//! Errors come back as an HTTP status with `{"error": "..."}`.

use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{
    check_aligned, BackendHandle, DecodingConfig, DecodingStrategy, EmbeddingBackend, TextEmbedding, TranslationBackend,
};
use crate::baselines::TokenEmbeddingMatrix;
use crate::error::BackendError;
use crate::measures::TokenScores;

pub mod wire {
    use super::*;

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    pub struct Decoding {
        pub strategy: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub beam_size: Option<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub seed: Option<u64>,
        pub max_len: u32,
    }

    impl From<&DecodingConfig> for Decoding {
        fn from(d: &DecodingConfig) -> Self {
            let (strategy, beam_size, seed) = match d.strategy {
                DecodingStrategy::Greedy => ("greedy", None, None),
                DecodingStrategy::Beam { width } => ("beam", Some(width), None),
                DecodingStrategy::Sample { seed } => ("sample", None, Some(seed)),
            };
            Decoding {
                strategy: strategy.into(),
                beam_size,
                seed,
                max_len: d.max_len,
            }
        }
    }

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    pub struct TranslateRequest {
        pub texts: Vec<String>,
        pub tgt_lang: String,
        pub decoding: Decoding,
    }

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    pub struct TranslateResponse {
        pub translations: Vec<String>,
        pub model_version: String,
    }

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    pub struct ScoreRequest {
        pub src_texts: Vec<String>,
        pub tgt_texts: Vec<String>,
        pub tgt_lang: String,
    }

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    pub struct ScoreResponse {
        pub token_logprobs: Vec<Vec<f64>>,
        pub model_version: String,
    }

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    pub struct EmbedRequest {
        pub texts: Vec<String>,
    }

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    pub struct EmbedResponse {
        pub token_embeddings: Vec<Vec<Vec<f64>>>,
        pub pooled: Vec<Vec<f64>>,
    }

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    pub struct HealthResponse {
        pub status: String,
        pub model_version: String,
        #[serde(default)]
        pub languages: Vec<String>,
    }

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    pub struct ErrorResponse {
        pub error: String,
    }
}

/// One HTTP exchange: the status and the decoded JSON body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub method: String,
    pub path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub request: Option<Value>,
    pub status: u16,
    pub response: Value,
}

/// Moves JSON bodies to and from the server. A returned `Err` means no HTTP
/// answer was obtained; error statuses are returned as `Ok`.
pub trait Transport: Send + Sync {
    fn send(&self, method: &str, path: &str, body: Option<&Value>) -> Result<(u16, Value), BackendError>;
}

pub struct UreqTransport {
    agent: ureq::Agent,
    base_url: String,
}

impl UreqTransport {
    pub fn new(base_url: &str, timeout: Duration) -> Self {
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .build();
        UreqTransport {
            agent: ureq::Agent::new_with_config(config),
            base_url: base_url.trim_end_matches('/').to_string(),
        }
    }
}

impl Transport for UreqTransport {
    fn send(&self, method: &str, path: &str, body: Option<&Value>) -> Result<(u16, Value), BackendError> {
        let url = format!("{}{}", self.base_url, path);
        let transport_err = |e: ureq::Error| BackendError::Transport {
            attempts: 1,
            message: e.to_string(),
        };
        let mut response = match (method, body) {
            ("GET", _) => self.agent.get(&url).call().map_err(transport_err)?,
            (_, Some(b)) => self.agent.post(&url).send_json(b).map_err(transport_err)?,
            (_, None) => self.agent.post(&url).send_empty().map_err(transport_err)?,
        };
        let status = response.status().as_u16();
        let text = response.body_mut().read_to_string().map_err(transport_err)?;
        let value = if text.trim().is_empty() {
            Value::Null
        } else {
            serde_json::from_str(&text).unwrap_or(Value::String(text))
        };
        Ok((status, value))
    }
}

/// Serves a recorded transcript instead of talking to a server. Requests are
/// matched by method, path and body.
pub struct ReplayTransport {
    exchanges: Vec<Exchange>,
}

impl ReplayTransport {
    pub fn new(exchanges: Vec<Exchange>) -> Self {
        ReplayTransport { exchanges }
    }

    /// Parses a JSONL transcript, one [`Exchange`] per line.
    pub fn from_jsonl(text: &str) -> Result<Self, BackendError> {
        let exchanges = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(|e| BackendError::Protocol(format!("bad transcript line: {e}"))))
            .collect::<Result<_, _>>()?;
        Ok(ReplayTransport { exchanges })
    }
}

impl Transport for ReplayTransport {
    fn send(&self, method: &str, path: &str, body: Option<&Value>) -> Result<(u16, Value), BackendError> {
        self.exchanges
            .iter()
            .find(|x| x.method == method && x.path == path && x.request.as_ref() == body)
            .map(|x| (x.status, x.response.clone()))
            .ok_or_else(|| BackendError::Transport {
                attempts: 1,
                message: format!("no recorded exchange for {method} {path}"),
            })
    }
}

/// Records every exchange passing through another transport.
pub struct RecordingTransport<T> {
    inner: T,
    log: Mutex<Vec<Exchange>>,
}

impl<T: Transport> RecordingTransport<T> {
    pub fn new(inner: T) -> Self {
        RecordingTransport {
            inner,
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn transcript(&self) -> Vec<Exchange> {
        self.log.lock().expect("transcript lock poisoned").clone()
    }

    pub fn transcript_jsonl(&self) -> String {
        self.transcript()
            .iter()
            .map(|x| serde_json::to_string(x).expect("exchange serializes") + "\n")
            .collect()
    }
}

impl<T: Transport> Transport for RecordingTransport<T> {
    fn send(&self, method: &str, path: &str, body: Option<&Value>) -> Result<(u16, Value), BackendError> {
        let (status, response) = self.inner.send(method, path, body)?;
        self.log.lock().expect("transcript lock poisoned").push(Exchange {
            method: method.into(),
            path: path.into(),
            request: body.cloned(),
            status,
            response: response.clone(),
        });
        Ok((status, response))
    }
}

#[derive(Debug, Clone)]
pub struct HttpOptions {
    pub batch_size: usize,
    pub max_in_flight: usize,
    /// Total attempts per request, including the first.
    pub attempts: u32,
    pub backoff_base: Duration,
    pub timeout: Duration,
}

impl Default for HttpOptions {
    fn default() -> Self {
        HttpOptions {
            batch_size: 32,
            max_in_flight: 2,
            attempts: 3,
            backoff_base: Duration::from_millis(250),
            timeout: Duration::from_secs(300),
        }
    }
}

pub struct HttpBackend {
    handle: BackendHandle,
    observed_version: Mutex<Option<String>>,
    languages: Vec<String>,
    transport: Box<dyn Transport>,
    options: HttpOptions,
}

impl HttpBackend {
    /// Connects to `endpoint` and reads the model version from `/health`.
    pub fn connect(
        endpoint: &str,
        backend_id: &str,
        decoding: DecodingConfig,
        options: HttpOptions,
    ) -> Result<Self, BackendError> {
        let transport = UreqTransport::new(endpoint, options.timeout);
        let mut backend = HttpBackend::with_transport(
            Box::new(transport),
            BackendHandle {
                backend_id: backend_id.into(),
                model_version: String::new(),
                decoding,
                endpoint: Some(endpoint.into()),
            },
            options,
        );
        backend.refresh_health()?;
        Ok(backend)
    }

    /// Builds a client over an arbitrary transport. An empty
    /// `handle.model_version` is filled in by the first response.
    pub fn with_transport(transport: Box<dyn Transport>, handle: BackendHandle, options: HttpOptions) -> Self {
        HttpBackend {
            handle,
            observed_version: Mutex::new(None),
            languages: Vec::new(),
            transport,
            options,
        }
    }

    pub fn refresh_health(&mut self) -> Result<wire::HealthResponse, BackendError> {
        let health: wire::HealthResponse = self.request("GET", "/health", None)?;
        self.handle.model_version = health.model_version.clone();
        self.languages = health.languages.clone();
        Ok(health)
    }

    /// Languages reported by `/health`; empty when unknown.
    pub fn languages(&self) -> &[String] {
        &self.languages
    }

    fn check_language(&self, lang: &str) -> Result<(), BackendError> {
        if !self.languages.is_empty() && !self.languages.iter().any(|l| l == lang) {
            return Err(BackendError::UnsupportedLanguage(lang.into()));
        }
        Ok(())
    }

    /// Every response must come from the same model; cached results would
    /// otherwise mix versions.
    fn check_version(&self, version: &str) -> Result<(), BackendError> {
        let mut observed = self.observed_version.lock().expect("version lock poisoned");
        let expected = if self.handle.model_version.is_empty() {
            observed.get_or_insert_with(|| version.to_string()).clone()
        } else {
            self.handle.model_version.clone()
        };
        if expected != version {
            return Err(BackendError::Protocol(format!(
                "model version changed from {expected} to {version}"
            )));
        }
        Ok(())
    }

    fn request<T: DeserializeOwned>(&self, method: &str, path: &str, body: Option<&Value>) -> Result<T, BackendError> {
        let mut attempt = 0;
        loop {
            attempt += 1;
            let outcome = self.transport.send(method, path, body).and_then(|(status, value)| {
                if (200..300).contains(&status) {
                    serde_json::from_value::<T>(value).map_err(|e| BackendError::Protocol(format!("{path}: {e}")))
                } else {
                    let message = serde_json::from_value::<wire::ErrorResponse>(value.clone())
                        .map(|e| e.error)
                        .unwrap_or_else(|_| value.to_string());
                    Err(BackendError::Server { status, message })
                }
            });
            match outcome {
                Err(e) if e.is_retryable() && attempt < self.options.attempts => {
                    log::warn!("{method} {path} failed (attempt {attempt}): {e}; retrying");
                    thread::sleep(self.options.backoff_base * 2u32.pow(attempt - 1));
                }
                Err(BackendError::Transport { message, .. }) => {
                    return Err(BackendError::Transport {
                        attempts: attempt,
                        message,
                    })
                }
                other => return other,
            }
        }
    }

    /// Runs `f` over chunks of `batch_size` items with at most
    /// `max_in_flight` chunks outstanding, concatenating results in order.
    fn chunked<T, R, F>(&self, items: &[T], f: F) -> Result<Vec<R>, BackendError>
    where
        T: Sync,
        R: Send,
        F: Fn(&[T]) -> Result<Vec<R>, BackendError> + Sync,
    {
        let chunks: Vec<&[T]> = items.chunks(self.options.batch_size.max(1)).collect();
        let mut out = Vec::with_capacity(items.len());
        for wave in chunks.chunks(self.options.max_in_flight.max(1)) {
            let results: Vec<Result<Vec<R>, BackendError>> = if wave.len() == 1 {
                vec![f(wave[0])]
            } else {
                thread::scope(|s| {
                    let handles: Vec<_> = wave.iter().map(|chunk| s.spawn(|| f(chunk))).collect();
                    handles
                        .into_iter()
                        .map(|h| h.join().expect("request thread panicked"))
                        .collect()
                })
            };
            for r in results {
                out.extend(r?);
            }
        }
        Ok(out)
    }

    pub fn embed_texts(&self, texts: &[String]) -> Result<Vec<TextEmbedding>, BackendError> {
        self.chunked(texts, |chunk| {
            let body = serde_json::to_value(wire::EmbedRequest { texts: chunk.to_vec() }).expect("serializable");
            let resp: wire::EmbedResponse = self.request("POST", "/embed", Some(&body))?;
            if resp.token_embeddings.len() != chunk.len() || resp.pooled.len() != chunk.len() {
                return Err(BackendError::Protocol(format!(
                    "/embed returned {} matrices for {} texts",
                    resp.token_embeddings.len(),
                    chunk.len()
                )));
            }
            resp.token_embeddings
                .into_iter()
                .zip(resp.pooled)
                .map(|(rows, pooled)| {
                    let tokens = TokenEmbeddingMatrix::new(rows).map_err(|e| BackendError::Protocol(e.to_string()))?;
                    if pooled.len() != tokens.dim() || pooled.iter().any(|x| !x.is_finite()) {
                        return Err(BackendError::Protocol(
                            "pooled vector does not match token matrix".into(),
                        ));
                    }
                    Ok(TextEmbedding { tokens, pooled })
                })
                .collect()
        })
    }
}

impl TranslationBackend for HttpBackend {
    fn handle(&self) -> &BackendHandle {
        &self.handle
    }

    fn translate(&self, texts: &[String], target_lang: &str) -> Result<Vec<String>, BackendError> {
        self.check_language(target_lang)?;
        let decoding = wire::Decoding::from(&self.handle.decoding);
        self.chunked(texts, |chunk| {
            let body = serde_json::to_value(wire::TranslateRequest {
                texts: chunk.to_vec(),
                tgt_lang: target_lang.into(),
                decoding: decoding.clone(),
            })
            .expect("serializable");
            let resp: wire::TranslateResponse = self.request("POST", "/translate", Some(&body))?;
            self.check_version(&resp.model_version)?;
            if resp.translations.len() != chunk.len() {
                return Err(BackendError::Protocol(format!(
                    "/translate returned {} hypotheses for {} texts",
                    resp.translations.len(),
                    chunk.len()
                )));
            }
            for (src, hyp) in chunk.iter().zip(&resp.translations) {
                if hyp.trim().is_empty() {
                    log::warn!("empty hypothesis for {src:?} into {target_lang}");
                }
            }
            Ok(resp.translations)
        })
    }

    fn force_decode_score(
        &self,
        src_texts: &[String],
        tgt_texts: &[String],
        target_lang: &str,
    ) -> Result<Vec<TokenScores>, BackendError> {
        check_aligned(src_texts, tgt_texts)?;
        self.check_language(target_lang)?;
        let pairs: Vec<(&String, &String)> = src_texts.iter().zip(tgt_texts).collect();
        self.chunked(&pairs, |chunk| {
            let body = serde_json::to_value(wire::ScoreRequest {
                src_texts: chunk.iter().map(|p| p.0.clone()).collect(),
                tgt_texts: chunk.iter().map(|p| p.1.clone()).collect(),
                tgt_lang: target_lang.into(),
            })
            .expect("serializable");
            let resp: wire::ScoreResponse = self.request("POST", "/score", Some(&body))?;
            self.check_version(&resp.model_version)?;
            if resp.token_logprobs.len() != chunk.len() {
                return Err(BackendError::Protocol(format!(
                    "/score returned {} score lists for {} pairs",
                    resp.token_logprobs.len(),
                    chunk.len()
                )));
            }
            resp.token_logprobs
                .into_iter()
                .map(|lps| TokenScores::new(lps).map_err(|e| BackendError::Protocol(e.to_string())))
                .collect()
        })
    }
}

impl EmbeddingBackend for HttpBackend {
    fn embedder_id(&self) -> &str {
        &self.handle.backend_id
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<TextEmbedding>, BackendError> {
        self.embed_texts(texts)
    }
}
