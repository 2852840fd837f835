//! Paraphrase-identification scoring: threshold tuning, accuracy, AUC and
//! macro averages, plus the benchmark report built from them.
//!
//! A sample is predicted positive when `score >= threshold`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{self, BootstrapConfig, EvalMetric, SignificanceCluster};

fn check_inputs(scores: &[f64], labels: &[bool]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.is_empty() {
        return Err(Error::InvalidInput("no samples".into()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidInput("NaN score".into()));
    }
    Ok(())
}

fn check_both_classes(labels: &[bool]) -> Result<(usize, usize)> {
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::DegenerateSplit(format!(
            "need both classes, got {pos} positive and {neg} negative labels"
        )));
    }
    Ok((pos, neg))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdChoice {
    pub threshold: f64,
    pub accuracy: f64,
}

/// Picks the accuracy-maximizing threshold among `-inf`, the midpoints
/// between adjacent distinct scores, and `+inf`. Ties go to the smallest
/// threshold.
pub fn tune_threshold(scores: &[f64], labels: &[bool]) -> Result<ThresholdChoice> {
    check_inputs(scores, labels)?;
    let (pos, _) = check_both_classes(labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // at -inf everything is predicted positive
    let mut correct = pos as i64;
    let mut best = (correct, f64::NEG_INFINITY);
    let mut i = 0;
    while i < order.len() {
        let value = scores[order[i]];
        let mut j = i;
        while j < order.len() && scores[order[j]] == value {
            correct += if labels[order[j]] { -1 } else { 1 };
            j += 1;
        }
        let threshold = match order.get(j) {
            Some(&next) => value + (scores[next] - value) / 2.0,
            None => f64::INFINITY,
        };
        if correct > best.0 {
            best = (correct, threshold);
        }
        i = j;
    }
    Ok(ThresholdChoice {
        threshold: best.1,
        accuracy: best.0 as f64 / scores.len() as f64,
    })
}

/// Fraction of samples where `(score >= threshold) == label`.
pub fn accuracy(scores: &[f64], labels: &[bool], threshold: f64) -> Result<f64> {
    check_inputs(scores, labels)?;
    let correct = scores
        .iter()
        .zip(labels)
        .filter(|(s, l)| (**s >= threshold) == **l)
        .count();
    Ok(correct as f64 / scores.len() as f64)
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half (Mann-Whitney with mid-ranks).
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_inputs(scores, labels)?;
    let (pos, neg) = check_both_classes(labels)?;
    Ok(auc_unchecked(scores, labels, pos, neg))
}

pub(crate) fn auc_unchecked(scores: &[f64], labels: &[bool], pos: usize, neg: usize) -> f64 {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j share their mean
        let mid_rank = (i + 1 + j) as f64 / 2.0;
        rank_sum += mid_rank * order[i..j].iter().filter(|&&k| labels[k]).count() as f64;
        i = j;
    }
    let u = rank_sum - (pos * (pos + 1)) as f64 / 2.0;
    u / (pos as f64 * neg as f64)
}

/// Arithmetic mean of named components.
pub fn macro_average(components: &[(String, f64)]) -> Result<f64> {
    if components.is_empty() {
        return Err(Error::InvalidInput("macro-average of zero components".into()));
    }
    Ok(components.iter().map(|(_, v)| v).sum::<f64>() / components.len() as f64)
}

/// One entry of a macro-average: a single dataset, or a group of datasets
/// that is averaged first (e.g. all PAWS-X languages).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroComponent {
    pub name: String,
    pub datasets: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MacroRecipe {
    pub components: Vec<MacroComponent>,
}

impl MacroRecipe {
    /// Every dataset is its own component.
    pub fn flat(datasets: &[String]) -> Self {
        MacroRecipe {
            components: datasets
                .iter()
                .map(|d| MacroComponent {
                    name: d.clone(),
                    datasets: vec![d.clone()],
                })
                .collect(),
        }
    }

    pub fn validate(&self, known: &[String]) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::Config("macro-average recipe has no components".into()));
        }
        for c in &self.components {
            if c.datasets.is_empty() {
                return Err(Error::Config(format!("macro component {} is empty", c.name)));
            }
            if let Some(d) = c.datasets.iter().find(|d| !known.contains(d)) {
                return Err(Error::Config(format!(
                    "macro component {} names unknown dataset {d}",
                    c.name
                )));
            }
        }
        Ok(())
    }

    /// Per-dataset weights so that `sum_d w_d * v_d` equals the recipe value.
    pub fn weights(&self, datasets: &[String]) -> Vec<f64> {
        let k = self.components.len() as f64;
        let mut w = vec![0.0; datasets.len()];
        for c in &self.components {
            for d in &c.datasets {
                if let Some(i) = datasets.iter().position(|x| x == d) {
                    w[i] += 1.0 / (k * c.datasets.len() as f64);
                }
            }
        }
        w
    }

    /// Component values (groups averaged) and their macro-average.
    pub fn evaluate(&self, values: &BTreeMap<String, f64>) -> Result<(Vec<(String, f64)>, f64)> {
        let mut components = Vec::with_capacity(self.components.len());
        for c in &self.components {
            let mut group = Vec::with_capacity(c.datasets.len());
            for d in &c.datasets {
                let v = values
                    .get(d)
                    .ok_or_else(|| Error::Config(format!("no result for dataset {d}")))?;
                group.push((d.clone(), *v));
            }
            components.push((c.name.clone(), macro_average(&group)?));
        }
        let avg = macro_average(&components)?;
        Ok((components, avg))
    }
}

/// Scores of several measures on the same labelled samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMatrix {
    pub measure_ids: Vec<String>,
    pub sample_ids: Vec<String>,
    /// `scores[m][s]`
    pub scores: Vec<Vec<f64>>,
    pub labels: Vec<bool>,
}

impl ScoreMatrix {
    pub fn new(
        measure_ids: Vec<String>,
        sample_ids: Vec<String>,
        scores: Vec<Vec<f64>>,
        labels: Vec<bool>,
    ) -> Result<Self> {
        if measure_ids.len() != scores.len() {
            return Err(Error::InvalidInput("one score row per measure required".into()));
        }
        if sample_ids.len() != labels.len() || scores.iter().any(|r| r.len() != labels.len()) {
            return Err(Error::InvalidInput("score rows must cover every sample".into()));
        }
        if scores.iter().flatten().any(|s| !s.is_finite()) {
            return Err(Error::InvalidInput(
                "score matrix has missing or non-finite cells".into(),
            ));
        }
        Ok(ScoreMatrix {
            measure_ids,
            sample_ids,
            scores,
            labels,
        })
    }

    pub fn measure(&self, id: &str) -> Option<&[f64]> {
        self.measure_ids
            .iter()
            .position(|m| m == id)
            .map(|i| self.scores[i].as_slice())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkMetric {
    /// Threshold tuned on the validation split, accuracy on test.
    Accuracy,
    Auc,
}

/// Scores for one dataset as fed to [`evaluate_benchmark`].
#[derive(Debug, Clone)]
pub struct DatasetScores {
    pub name: String,
    pub metric: BenchmarkMetric,
    pub validation: Option<ScoreMatrix>,
    pub test: ScoreMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureResult {
    pub measure: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    pub in_cluster: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetResult {
    pub dataset: String,
    pub metric: BenchmarkMetric,
    pub samples: usize,
    pub measures: Vec<MeasureResult>,
    pub significance: SignificanceCluster,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroResult {
    pub measure: String,
    pub components: Vec<(String, f64)>,
    pub value: f64,
    pub in_cluster: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub measures: Vec<String>,
    pub datasets: Vec<DatasetResult>,
    pub recipe: MacroRecipe,
    pub macro_average: Vec<MacroResult>,
    pub macro_significance: SignificanceCluster,
    pub bootstrap: BootstrapConfig,
}

/// Tunes thresholds, evaluates every measure on every test split, and runs
/// paired bootstrap per dataset and on the macro-average.
pub fn evaluate_benchmark(
    datasets: &[DatasetScores],
    recipe: &MacroRecipe,
    config: &BootstrapConfig,
) -> Result<BenchmarkReport> {
    let first = datasets
        .first()
        .ok_or_else(|| Error::Config("benchmark has no datasets".into()))?;
    let measures = first.test.measure_ids.clone();
    let names: Vec<String> = datasets.iter().map(|d| d.name.clone()).collect();
    recipe.validate(&names)?;

    let mut results = Vec::with_capacity(datasets.len());
    let mut replicates = Vec::with_capacity(datasets.len());
    for d in datasets {
        if d.test.measure_ids != measures {
            return Err(Error::Config(format!(
                "dataset {} was scored with different measures",
                d.name
            )));
        }
        let metrics: Vec<EvalMetric> = match d.metric {
            BenchmarkMetric::Auc => vec![EvalMetric::Auc; measures.len()],
            BenchmarkMetric::Accuracy => {
                let val = d.validation.as_ref().ok_or_else(|| {
                    Error::Config(format!(
                        "dataset {} needs a validation split to tune thresholds",
                        d.name
                    ))
                })?;
                if val.measure_ids != measures {
                    return Err(Error::Config(format!(
                        "validation split of {} was scored with different measures",
                        d.name
                    )));
                }
                val.scores
                    .iter()
                    .map(|s| tune_threshold(s, &val.labels).map(|t| EvalMetric::Accuracy { threshold: t.threshold }))
                    .collect::<Result<_>>()?
            }
        };
        let reps = stats::bootstrap_replicates(&metrics, &d.test.scores, &d.test.labels, config, &d.name)?;
        let cluster = stats::cluster_from_replicates(&measures, &reps, config.alpha);
        let measure_results = measures
            .iter()
            .enumerate()
            .map(|(m, id)| MeasureResult {
                measure: id.clone(),
                value: reps.point[m],
                threshold: match metrics[m] {
                    EvalMetric::Accuracy { threshold } => Some(threshold),
                    EvalMetric::Auc => None,
                },
                in_cluster: cluster.members.contains(id),
            })
            .collect();
        results.push(DatasetResult {
            dataset: d.name.clone(),
            metric: d.metric,
            samples: d.test.labels.len(),
            measures: measure_results,
            significance: cluster,
        });
        replicates.push(reps);
    }

    let weights = recipe.weights(&names);
    let combined = stats::combine_replicates(&replicates, &weights)?;
    let macro_cluster = stats::cluster_from_replicates(&measures, &combined, config.alpha);
    let mut macro_results = Vec::with_capacity(measures.len());
    for (m, id) in measures.iter().enumerate() {
        let values: BTreeMap<String, f64> = results
            .iter()
            .map(|r| (r.dataset.clone(), r.measures[m].value))
            .collect();
        let (components, value) = recipe.evaluate(&values)?;
        macro_results.push(MacroResult {
            measure: id.clone(),
            components,
            value,
            in_cluster: macro_cluster.members.contains(id),
        });
    }
    Ok(BenchmarkReport {
        measures,
        datasets: results,
        recipe: recipe.clone(),
        macro_average: macro_results,
        macro_significance: macro_cluster,
        bootstrap: config.clone(),
    })
}

impl BenchmarkReport {
    /// Aligned text table: one row per measure, one column per dataset plus
    /// the macro-average. Values are percentages; `*` marks the top
    /// significance cluster.
    pub fn to_table(&self) -> String {
        let mut header = vec!["measure".to_string()];
        for d in &self.datasets {
            let kind = match d.metric {
                BenchmarkMetric::Accuracy => "acc",
                BenchmarkMetric::Auc => "auc",
            };
            header.push(format!("{} ({kind})", d.dataset));
        }
        header.push("macro".into());
        let mut rows = vec![header];
        for (m, id) in self.measures.iter().enumerate() {
            let mut row = vec![id.clone()];
            for d in &self.datasets {
                let r = &d.measures[m];
                row.push(format_cell(r.value, r.in_cluster));
            }
            let mr = &self.macro_average[m];
            row.push(format_cell(mr.value, mr.in_cluster));
            rows.push(row);
        }
        render_table(&rows)
    }
}

fn format_cell(value: f64, bold: bool) -> String {
    format!("{:.1}{}", 100.0 * value, if bold { "*" } else { "" })
}

pub(crate) fn render_table(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        let cells: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, s)| {
                if c == 0 {
                    format!("{s:<w$}", w = widths[c])
                } else {
                    format!("{s:>w$}", w = widths[c])
                }
            })
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
        if i == 0 {
            let _ = writeln!(
                out,
                "{}",
                "-".repeat(widths.iter().sum::<usize>() + 2 * cols.saturating_sub(1))
            );
        }
    }
    out
}
