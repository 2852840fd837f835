//! Translation-based paraphrastic similarity.
//!
//! Three measures are computed from a multilingual translation model that is
//! reached through the [`backend::TranslationBackend`] trait:
//!
//! - **direct**: the length-normalized probability of `A` given `B`;
//! - **pivot**: the probability of `A` given `B'`, a translation of `B` into a
//!   pivot language;
//! - **cross**: the probability that `B'`, a translation of `B` into some target
//!   language, would be generated from `A`.
//!
//! Each measure can be divided by its reconstruction probability, so that a
//! segment is maximally similar to itself, and averaged over both directions.
//!
//! The crate also carries the surrounding evaluation machinery: surface and
//! embedding baselines, dataset loaders, threshold tuning / AUC, paired
//! bootstrap significance, Kendall correlation and reference-based evaluation
//! of generated text.

pub mod backend;
pub mod baselines;
pub mod benchmark;
pub mod d2t;
pub mod datasets;
mod error;
pub mod measures;
pub mod stats;

pub use error::{BackendError, Error, Result};
pub use measures::{
    length_normalized_prob, score, score_cross, score_direct, score_pairs, score_pivot, version_signature, Measure,
    MeasureConfig, ScoreDirection, SegmentPair, SimilarityScore, TokenScores,
};

/// Version of this toolkit as embedded in signatures and reports.
pub const TOOL_VERSION: &str = concat!("v", env!("CARGO_PKG_VERSION"));
