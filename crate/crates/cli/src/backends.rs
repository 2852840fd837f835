use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use serde::Serialize;
use transim::backend::{
    CachedBackend, EmbeddingBackend, HttpBackend, HttpOptions, ScoreCache, ToyBackend, ToyEmbedder, TranslationBackend,
};
use transim::Result;

use crate::config::BackendConfig;

/// Identity of the backend as recorded in reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BackendInfo {
    pub endpoint: String,
    pub model: String,
    pub model_version: String,
    pub stack_version: String,
    pub decoding: String,
    pub embedder: String,
}

pub struct Backends {
    pub translation: Arc<dyn TranslationBackend>,
    pub embedding: Arc<dyn EmbeddingBackend>,
    pub info: BackendInfo,
    pub cache: Option<Arc<ScoreCache>>,
}

impl Backends {
    /// Connects to the configured backend, optionally behind a persistent
    /// cache rooted at `cache_dir`.
    pub fn open(config: &BackendConfig, cache_dir: Option<&Path>) -> Result<Self> {
        let (translation, embedding): (Arc<dyn TranslationBackend>, Arc<dyn EmbeddingBackend>) =
            if config.endpoint == "toy" {
                (
                    Arc::new(ToyBackend::new(config.toy.clone())?),
                    Arc::new(ToyEmbedder::default()),
                )
            } else {
                let options = HttpOptions {
                    batch_size: config.max_batch,
                    max_in_flight: config.max_in_flight,
                    timeout: Duration::from_secs(config.timeout_secs),
                    ..HttpOptions::default()
                };
                let id = config.model.as_deref().unwrap_or("nmt");
                let http = Arc::new(HttpBackend::connect(
                    &config.endpoint,
                    id,
                    config.decoding.clone(),
                    options,
                )?);
                (http.clone(), http)
            };
        let handle = translation.handle().clone();
        let model = config.model.clone().unwrap_or_else(|| handle.backend_id.clone());
        let info = BackendInfo {
            endpoint: config.endpoint.clone(),
            model,
            model_version: handle.model_version.clone(),
            stack_version: config.stack_version.clone(),
            decoding: handle.decoding.fingerprint(),
            embedder: embedding.embedder_id().to_string(),
        };
        let (translation, cache) = match cache_dir {
            Some(dir) => {
                let cache = Arc::new(ScoreCache::open(dir, &handle.backend_id)?);
                log::info!("cache {} holds {} entries", dir.display(), cache.len());
                let cached: Arc<dyn TranslationBackend> = Arc::new(CachedBackend::new(translation, cache.clone()));
                (cached, Some(cache))
            }
            None => (translation, None),
        };
        Ok(Backends {
            translation,
            embedding,
            info,
            cache,
        })
    }
}
