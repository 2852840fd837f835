//! Paired bootstrap significance testing, top significance clusters, Kendall
//! correlation and bootstrap confidence intervals.
//!
//! Every bootstrap repetition draws from its own generator seeded with
//! `SHA-256(master_seed, dataset_id, repetition)`, so results do not depend
//! on scheduling and repetition `i` of different datasets can be combined.

mod bootstrap;
mod kendall;

pub use bootstrap::{
    bootstrap_replicates, cluster_from_replicates, combine_replicates, combined_macro_bootstrap, paired_bootstrap_p,
    replicate_p, top_cluster, BootstrapReplicates, EvalMetric, PairP, SignificanceCluster, StatsReport, TIE_CONVENTION,
};
pub(crate) use kendall::interval as kendall_interval;
pub use kendall::{
    boot_both_ci, correlation_ci, kendall_tau, pairwise_correlation_matrix, percentile, CorrelationEstimate,
    CorrelationMatrix,
};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResampleAxes {
    #[default]
    Samples,
    SamplesAndSystems,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BootstrapConfig {
    pub repetitions: usize,
    pub alpha: f64,
    pub seed: u64,
    pub axes: ResampleAxes,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            repetitions: 1000,
            alpha: 0.05,
            seed: 0,
            axes: ResampleAxes::Samples,
        }
    }
}

impl BootstrapConfig {
    pub fn with_seed(seed: u64) -> Self {
        BootstrapConfig {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::Config("bootstrap needs at least one repetition".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        Ok(())
    }
}

/// Generator for one bootstrap repetition.
pub fn repetition_rng(master_seed: u64, dataset_id: &str, repetition: usize) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    h.update((dataset_id.len() as u64).to_le_bytes());
    h.update(dataset_id.as_bytes());
    h.update((repetition as u64).to_le_bytes());
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&h.finalize());
    ChaCha8Rng::from_seed(seed)
}

/// `n` indices drawn uniformly with replacement from `0..n`.
pub fn resample_indices(rng: &mut impl Rng, n: usize) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}
