//! Baseline similarity measures: character / word n-gram overlap and
//! embedding-based similarity.

mod embedding;
mod surface;
pub mod tokenize;

pub use embedding::{
    cosine, embedding_signature, mean_pooled_cosine, token_aggregation, token_aggregation_f1, TokenAggregation,
    TokenEmbeddingMatrix,
};
pub use surface::{
    bleu_signature, chrf, chrf_precision_recall, chrf_signature, sent_bleu, symmetric_surface, BleuConfig,
    BleuTokenizer, ChrfConfig, SurfaceMetric,
};
