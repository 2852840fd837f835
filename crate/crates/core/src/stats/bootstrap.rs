use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{repetition_rng, resample_indices, BootstrapConfig};
use crate::benchmark::auc_unchecked;
use crate::error::{Error, Result};

/// How exact ties inside a repetition are counted.
pub const TIE_CONVENTION: &str = "one-sided; a repetition counts as a win for a over b only if metric(a) - metric(b) > 0, ties and undefined values are non-wins";

/// Evaluation metric applied to a (possibly resampled) score vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "metric", rename_all = "snake_case")]
pub enum EvalMetric {
    Accuracy { threshold: f64 },
    Auc,
}

impl EvalMetric {
    /// `None` when the metric is undefined on this sample (empty input, or a
    /// single class for AUC).
    pub fn evaluate(&self, scores: &[f64], labels: &[bool]) -> Option<f64> {
        if scores.is_empty() || scores.len() != labels.len() {
            return None;
        }
        match *self {
            EvalMetric::Accuracy { threshold } => {
                let correct = scores
                    .iter()
                    .zip(labels)
                    .filter(|(s, l)| (**s >= threshold) == **l)
                    .count();
                Some(correct as f64 / scores.len() as f64)
            }
            EvalMetric::Auc => {
                let pos = labels.iter().filter(|&&l| l).count();
                let neg = labels.len() - pos;
                (pos > 0 && neg > 0).then(|| auc_unchecked(scores, labels, pos, neg))
            }
        }
    }
}

/// Metric values of several measures on the full data and on each bootstrap
/// repetition. `reps[i][m]` belongs to repetition `i`, measure `m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReplicates {
    pub point: Vec<f64>,
    pub reps: Vec<Vec<Option<f64>>>,
}

impl BootstrapReplicates {
    pub fn repetitions(&self) -> usize {
        self.reps.len()
    }

    pub fn measures(&self) -> usize {
        self.point.len()
    }
}

/// Evaluates every measure on the same resampled indices in each repetition.
pub fn bootstrap_replicates(
    metrics: &[EvalMetric],
    scores: &[Vec<f64>],
    labels: &[bool],
    config: &BootstrapConfig,
    dataset_id: &str,
) -> Result<BootstrapReplicates> {
    config.validate()?;
    if metrics.len() != scores.len() {
        return Err(Error::InvalidInput("one metric per measure required".into()));
    }
    if labels.is_empty() {
        return Err(Error::InvalidInput("no samples to resample".into()));
    }
    if scores.iter().any(|s| s.len() != labels.len()) {
        return Err(Error::InvalidInput("score vectors and labels are misaligned".into()));
    }
    let point = metrics
        .iter()
        .zip(scores)
        .map(|(m, s)| {
            m.evaluate(s, labels)
                .ok_or_else(|| Error::DegenerateSplit(format!("metric undefined on dataset {dataset_id}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = labels.len();
    let reps = (0..config.repetitions)
        .into_par_iter()
        .map(|i| {
            let idx = resample_indices(&mut repetition_rng(config.seed, dataset_id, i), n);
            let lab: Vec<bool> = idx.iter().map(|&j| labels[j]).collect();
            let mut buf = vec![0.0; n];
            metrics
                .iter()
                .zip(scores)
                .map(|(m, s)| {
                    for (b, &j) in buf.iter_mut().zip(&idx) {
                        *b = s[j];
                    }
                    m.evaluate(&buf, &lab)
                })
                .collect()
        })
        .collect();
    Ok(BootstrapReplicates { point, reps })
}

/// Fraction of repetitions in which measure `a` does not beat measure `b`.
pub fn replicate_p(reps: &BootstrapReplicates, a: usize, b: usize) -> f64 {
    let non_wins = reps
        .reps
        .iter()
        .filter(|r| !matches!((r[a], r[b]), (Some(x), Some(y)) if x - y > 0.0))
        .count();
    non_wins as f64 / reps.reps.len() as f64
}

/// One-sided paired bootstrap p-value for "a beats b".
pub fn paired_bootstrap_p(
    metric: EvalMetric,
    scores_a: &[f64],
    scores_b: &[f64],
    labels: &[bool],
    config: &BootstrapConfig,
) -> Result<f64> {
    let reps = bootstrap_replicates(
        &[metric, metric],
        &[scores_a.to_vec(), scores_b.to_vec()],
        labels,
        config,
        "",
    )?;
    Ok(replicate_p(&reps, 0, 1))
}

/// Weighted sum of per-dataset replicates, repetition by repetition.
pub fn combine_replicates(datasets: &[BootstrapReplicates], weights: &[f64]) -> Result<BootstrapReplicates> {
    let first = datasets
        .first()
        .ok_or_else(|| Error::InvalidInput("no datasets to combine".into()))?;
    if weights.len() != datasets.len() {
        return Err(Error::InvalidInput("one weight per dataset required".into()));
    }
    for d in datasets {
        if d.repetitions() != first.repetitions() {
            return Err(Error::InvalidInput(format!(
                "repetition counts differ: {} vs {}",
                d.repetitions(),
                first.repetitions()
            )));
        }
        if d.measures() != first.measures() {
            return Err(Error::InvalidInput(
                "datasets were evaluated on different measures".into(),
            ));
        }
    }
    let measures = first.measures();
    let point = (0..measures)
        .map(|m| datasets.iter().zip(weights).map(|(d, w)| w * d.point[m]).sum())
        .collect();
    let reps = (0..first.repetitions())
        .map(|i| {
            (0..measures)
                .map(|m| {
                    datasets
                        .iter()
                        .zip(weights)
                        .map(|(d, w)| d.reps[i][m].map(|v| w * v))
                        .sum::<Option<f64>>()
                })
                .collect()
        })
        .collect();
    Ok(BootstrapReplicates { point, reps })
}

/// p-value for "a beats b" on the weighted macro-average, combining
/// repetition `i` of every dataset into repetition `i` of the benchmark.
pub fn combined_macro_bootstrap(datasets: &[BootstrapReplicates], weights: &[f64], a: usize, b: usize) -> Result<f64> {
    let combined = combine_replicates(datasets, weights)?;
    if a >= combined.measures() || b >= combined.measures() {
        return Err(Error::InvalidInput("measure index out of range".into()));
    }
    Ok(replicate_p(&combined, a, b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceCluster {
    pub measures: Vec<String>,
    pub members: Vec<String>,
    /// `p_values[a][b]`: p-value for "measure a beats measure b".
    pub p_values: Vec<Vec<f64>>,
    pub alpha: f64,
}

impl SignificanceCluster {
    pub fn contains(&self, measure: &str) -> bool {
        self.members.iter().any(|m| m == measure)
    }

    /// Measures that beat `measure` with p below alpha.
    pub fn beaten_by(&self, measure: usize) -> Vec<usize> {
        (0..self.measures.len())
            .filter(|&a| a != measure && self.p_values[a][measure] < self.alpha)
            .collect()
    }
}

pub fn cluster_from_replicates(measures: &[String], reps: &BootstrapReplicates, alpha: f64) -> SignificanceCluster {
    let k = measures.len();
    let p_values: Vec<Vec<f64>> = (0..k)
        .map(|a| {
            (0..k)
                .map(|b| if a == b { 1.0 } else { replicate_p(reps, a, b) })
                .collect()
        })
        .collect();
    let members = (0..k)
        .filter(|&m| !(0..k).any(|a| a != m && p_values[a][m] < alpha))
        .map(|m| measures[m].clone())
        .collect();
    SignificanceCluster {
        measures: measures.to_vec(),
        members,
        p_values,
        alpha,
    }
}

/// Measures not significantly outperformed by any other measure.
pub fn top_cluster(
    measures: &[String],
    per_sample_scores: &[Vec<f64>],
    labels: &[bool],
    metric: EvalMetric,
    config: &BootstrapConfig,
) -> Result<SignificanceCluster> {
    if measures.is_empty() {
        return Err(Error::InvalidInput("no measures to cluster".into()));
    }
    if measures.len() != per_sample_scores.len() {
        return Err(Error::InvalidInput("one score vector per measure required".into()));
    }
    let metrics = vec![metric; measures.len()];
    let reps = bootstrap_replicates(&metrics, per_sample_scores, labels, config, "")?;
    Ok(cluster_from_replicates(measures, &reps, config.alpha))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairP {
    pub a: String,
    pub b: String,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub scope: String,
    pub pairs: Vec<PairP>,
    pub cluster: Vec<String>,
    pub alpha: f64,
    pub repetitions: usize,
    pub seed: u64,
    pub tie_convention: String,
}

impl StatsReport {
    pub fn new(scope: impl Into<String>, cluster: &SignificanceCluster, config: &BootstrapConfig) -> Self {
        let mut pairs = Vec::new();
        for (a, row) in cluster.measures.iter().enumerate() {
            for (b, col) in cluster.measures.iter().enumerate() {
                if a != b {
                    pairs.push(PairP {
                        a: row.clone(),
                        b: col.clone(),
                        p: cluster.p_values[a][b],
                    });
                }
            }
        }
        StatsReport {
            scope: scope.into(),
            pairs,
            cluster: cluster.members.clone(),
            alpha: cluster.alpha,
            repetitions: config.repetitions,
            seed: config.seed,
            tie_convention: TIE_CONVENTION.into(),
        }
    }
}
