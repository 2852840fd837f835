use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{repetition_rng, resample_indices, BootstrapConfig};
use crate::error::{Error, Result};
use rand::Rng;

/// Kendall tau-b, computed in O(n log n) with Knight's algorithm.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "kendall_tau: lengths {} and {} differ",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::UndefinedCorrelation("fewer than two observations".into()));
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("kendall_tau: NaN value".into()));
    }
    let n = x.len() as i64;
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));

    let tied_pairs = |run: i64| run * (run - 1) / 2;
    let (mut ties_x, mut ties_xy) = (0i64, 0i64);
    let (mut run_x, mut run_xy) = (1i64, 1i64);
    for w in order.windows(2) {
        let (a, b) = (w[0], w[1]);
        if x[a] == x[b] {
            run_x += 1;
            if y[a] == y[b] {
                run_xy += 1;
            } else {
                ties_xy += tied_pairs(run_xy);
                run_xy = 1;
            }
        } else {
            ties_x += tied_pairs(run_x);
            ties_xy += tied_pairs(run_xy);
            run_x = 1;
            run_xy = 1;
        }
    }
    ties_x += tied_pairs(run_x);
    ties_xy += tied_pairs(run_xy);

    let mut ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();
    let swaps = merge_count(&mut ys);

    let mut ties_y = 0i64;
    let mut run_y = 1i64;
    for w in ys.windows(2) {
        if w[0] == w[1] {
            run_y += 1;
        } else {
            ties_y += tied_pairs(run_y);
            run_y = 1;
        }
    }
    ties_y += tied_pairs(run_y);

    let total = n * (n - 1) / 2;
    if total == ties_x || total == ties_y {
        return Err(Error::UndefinedCorrelation("a vector has zero variance".into()));
    }
    let numerator = total - ties_x - ties_y + ties_xy - 2 * swaps;
    let denominator = (((total - ties_x) as f64) * ((total - ties_y) as f64)).sqrt();
    Ok(numerator as f64 / denominator)
}

/// Sorts `v` ascending and returns the number of inversions.
fn merge_count(v: &mut [f64]) -> i64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid]) + merge_count(&mut v[mid..]);
    let mut merged = Vec::with_capacity(n);
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            merged.push(v[j]);
            swaps += (mid - i) as i64;
            j += 1;
        } else {
            merged.push(v[i]);
            i += 1;
        }
    }
    merged.extend_from_slice(&v[i..mid]);
    merged.extend_from_slice(&v[j..]);
    v.copy_from_slice(&merged);
    swaps
}

/// Linearly interpolated quantile of sorted values, `q` in [0, 1].
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEstimate {
    pub tau: f64,
    pub low: f64,
    pub high: f64,
    /// Repetitions on which the correlation was defined.
    pub valid_repetitions: usize,
}

pub(crate) fn interval(point: f64, mut values: Vec<f64>, alpha: f64) -> Result<CorrelationEstimate> {
    if values.is_empty() {
        return Err(Error::UndefinedCorrelation(
            "correlation undefined on every bootstrap repetition".into(),
        ));
    }
    values.sort_by(f64::total_cmp);
    Ok(CorrelationEstimate {
        tau: point,
        low: percentile(&values, alpha / 2.0),
        high: percentile(&values, 1.0 - alpha / 2.0),
        valid_repetitions: values.len(),
    })
}

/// Percentile bootstrap interval for tau-b, resampling observations.
pub fn correlation_ci(x: &[f64], y: &[f64], config: &BootstrapConfig, scope: &str) -> Result<CorrelationEstimate> {
    config.validate()?;
    let point = kendall_tau(x, y)?;
    let values: Vec<f64> = (0..config.repetitions)
        .into_par_iter()
        .filter_map(|i| {
            let idx = resample_indices(&mut repetition_rng(config.seed, scope, i), x.len());
            let xs: Vec<f64> = idx.iter().map(|&j| x[j]).collect();
            let ys: Vec<f64> = idx.iter().map(|&j| y[j]).collect();
            kendall_tau(&xs, &ys).ok()
        })
        .collect();
    interval(point, values, config.alpha)
}

/// Percentile bootstrap interval that resamples systems and items jointly:
/// each repetition draws systems and items with replacement and keeps every
/// observation of a drawn (system, item) cell, once per draw combination.
pub fn boot_both_ci(
    x: &[f64],
    y: &[f64],
    systems: &[String],
    items: &[String],
    config: &BootstrapConfig,
    scope: &str,
) -> Result<CorrelationEstimate> {
    config.validate()?;
    if systems.len() != x.len() || items.len() != x.len() {
        return Err(Error::InvalidInput(
            "system and item ids must align with the observations".into(),
        ));
    }
    let point = kendall_tau(x, y)?;
    let index = |ids: &[String]| -> (Vec<usize>, usize) {
        let mut map = BTreeMap::new();
        let codes = ids
            .iter()
            .map(|id| {
                let next = map.len();
                *map.entry(id.as_str()).or_insert(next)
            })
            .collect();
        (codes, map.len())
    };
    let (sys, n_sys) = index(systems);
    let (item, n_item) = index(items);
    let values: Vec<f64> = (0..config.repetitions)
        .into_par_iter()
        .filter_map(|i| {
            let mut rng = repetition_rng(config.seed, scope, i);
            let mut sys_count = vec![0usize; n_sys];
            for _ in 0..n_sys {
                sys_count[rng.random_range(0..n_sys)] += 1;
            }
            let mut item_count = vec![0usize; n_item];
            for _ in 0..n_item {
                item_count[rng.random_range(0..n_item)] += 1;
            }
            let (mut xs, mut ys) = (Vec::new(), Vec::new());
            for k in 0..x.len() {
                for _ in 0..sys_count[sys[k]] * item_count[item[k]] {
                    xs.push(x[k]);
                    ys.push(y[k]);
                }
            }
            kendall_tau(&xs, &ys).ok()
        })
        .collect();
    interval(point, values, config.alpha)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub measures: Vec<String>,
    pub datasets: Vec<String>,
    /// Mean over datasets of the per-dataset tau-b.
    pub tau: Vec<Vec<f64>>,
    pub low: Vec<Vec<f64>>,
    pub high: Vec<Vec<f64>>,
}

/// Kendall tau-b between every pair of measures, averaged over datasets,
/// with percentile bootstrap intervals. `datasets[d].1[m]` holds the scores
/// of measure `m` on dataset `d`.
pub fn pairwise_correlation_matrix(
    measures: &[String],
    datasets: &[(String, Vec<Vec<f64>>)],
    config: &BootstrapConfig,
) -> Result<CorrelationMatrix> {
    config.validate()?;
    if datasets.is_empty() {
        return Err(Error::InvalidInput("no datasets".into()));
    }
    for (name, scores) in datasets {
        if scores.len() != measures.len() {
            return Err(Error::InvalidInput(format!(
                "dataset {name}: one score vector per measure required"
            )));
        }
        if scores.iter().any(|s| s.len() != scores[0].len()) {
            return Err(Error::InvalidInput(format!(
                "dataset {name}: score vectors are misaligned"
            )));
        }
    }
    let k = measures.len();
    let mean_tau = |views: &[Vec<Vec<f64>>], a: usize, b: usize| -> Result<f64> {
        let mut sum = 0.0;
        for v in views {
            sum += kendall_tau(&v[a], &v[b])?;
        }
        Ok(sum / views.len() as f64)
    };
    let full: Vec<Vec<Vec<f64>>> = datasets.iter().map(|(_, s)| s.clone()).collect();

    // per repetition: the resampled taus of every pair (None if undefined)
    let reps: Vec<Vec<Option<f64>>> = (0..config.repetitions)
        .into_par_iter()
        .map(|i| {
            let views: Vec<Vec<Vec<f64>>> = datasets
                .iter()
                .map(|(name, scores)| {
                    let idx = resample_indices(&mut repetition_rng(config.seed, name, i), scores[0].len());
                    scores.iter().map(|s| idx.iter().map(|&j| s[j]).collect()).collect()
                })
                .collect();
            let mut out = Vec::with_capacity(k * k);
            for a in 0..k {
                for b in 0..k {
                    out.push(if a < b { mean_tau(&views, a, b).ok() } else { None });
                }
            }
            out
        })
        .collect();

    let mut tau = vec![vec![1.0; k]; k];
    let mut low = vec![vec![1.0; k]; k];
    let mut high = vec![vec![1.0; k]; k];
    for a in 0..k {
        for b in a + 1..k {
            let point = mean_tau(&full, a, b)?;
            let values = reps.iter().filter_map(|r| r[a * k + b]).collect();
            let est = interval(point, values, config.alpha)?;
            for (m, v) in [(&mut tau, est.tau), (&mut low, est.low), (&mut high, est.high)] {
                m[a][b] = v;
                m[b][a] = v;
            }
        }
    }
    Ok(CorrelationMatrix {
        measures: measures.to_vec(),
        datasets: datasets.iter().map(|(n, _)| n.clone()).collect(),
        tau,
        low,
        high,
    })
}
