//! Reference-based evaluation of generated text against human judgments:
//! directional scoring, max-aggregation over references, adequacy from
//! ratings and per-language correlation averaging.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backend::TranslationBackend;
use crate::error::{Error, Result};
use crate::measures::{score_pairs, MeasureConfig, ScoreDirection, SegmentPair};
use crate::stats::{kendall_tau, repetition_rng, resample_indices, BootstrapConfig};

/// Criteria averaged into adequacy unless configured otherwise.
pub const DEFAULT_ADEQUACY_CRITERIA: [&str; 3] = ["data_coverage", "relevance", "correctness"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgedSample {
    pub doc_id: String,
    pub system_id: String,
    pub hypothesis: String,
    pub references: Vec<String>,
    /// criterion -> one rating per annotator
    pub ratings: BTreeMap<String, Vec<f64>>,
    pub language: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    HypGivenRef,
    RefGivenHyp,
    Average,
}

impl Direction {
    pub const ALL: [Direction; 3] = [Direction::HypGivenRef, Direction::RefGivenHyp, Direction::Average];

    pub fn label(self) -> &'static str {
        match self {
            Direction::HypGivenRef => "hyp|ref",
            Direction::RefGivenHyp => "ref|hyp",
            Direction::Average => "avg",
        }
    }
}

/// Mean over annotators per criterion, then mean over criteria.
pub fn adequacy<S: AsRef<str>>(ratings: &BTreeMap<String, Vec<f64>>, criteria: &[S]) -> Result<f64> {
    if criteria.is_empty() {
        return Err(Error::Config("no adequacy criteria configured".into()));
    }
    let mut sum = 0.0;
    for c in criteria {
        let c = c.as_ref();
        let values = ratings
            .get(c)
            .filter(|v| !v.is_empty())
            .ok_or_else(|| Error::Data(format!("missing ratings for criterion {c}")))?;
        sum += values.iter().sum::<f64>() / values.len() as f64;
    }
    Ok(sum / criteria.len() as f64)
}

/// Scores of a hypothesis against one reference in both directions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionalScores {
    pub hyp_given_ref: f64,
    pub ref_given_hyp: f64,
}

impl DirectionalScores {
    pub fn get(&self, direction: Direction) -> f64 {
        match direction {
            Direction::HypGivenRef => self.hyp_given_ref,
            Direction::RefGivenHyp => self.ref_given_hyp,
            Direction::Average => 0.5 * self.hyp_given_ref + 0.5 * self.ref_given_hyp,
        }
    }
}

/// Maximum over references of the score in `direction`; `Average` is taken
/// per reference before the maximum.
pub fn multi_ref_aggregate(per_reference: &[DirectionalScores], direction: Direction) -> Result<f64> {
    per_reference
        .iter()
        .map(|s| s.get(direction))
        .reduce(f64::max)
        .ok_or_else(|| Error::InvalidInput("no references".into()))
}

/// Scores `hypothesis` against every reference with `metric` and aggregates.
pub fn multi_ref_score<F>(mut metric: F, hypothesis: &str, references: &[String], direction: Direction) -> Result<f64>
where
    F: FnMut(&str, &str) -> Result<DirectionalScores>,
{
    let per_ref = references
        .iter()
        .map(|r| metric(hypothesis, r))
        .collect::<Result<Vec<_>>>()?;
    multi_ref_aggregate(&per_ref, direction)
}

/// Directional scores of every (hypothesis, reference) combination under a
/// translation-based measure, batched into a single scoring call.
/// `result[i][r]` belongs to sample `i`, reference `r`.
pub fn nmt_directional_scores(
    samples: &[JudgedSample],
    config: &MeasureConfig,
    backend: &dyn TranslationBackend,
) -> Result<Vec<Vec<DirectionalScores>>> {
    let config = config.clone().direction(ScoreDirection::Symmetric);
    let pairs: Vec<SegmentPair> = samples
        .iter()
        .flat_map(|s| {
            s.references.iter().map(|r| {
                SegmentPair::new(s.hypothesis.clone(), r.clone()).with_langs(s.language.clone(), s.language.clone())
            })
        })
        .collect();
    let scores = score_pairs(&pairs, &config, backend)?;
    let mut it = scores.into_iter();
    let mut out = Vec::with_capacity(samples.len());
    for s in samples {
        let mut row = Vec::with_capacity(s.references.len());
        for _ in &s.references {
            let sc = it.next().ok_or_else(|| Error::InvalidInput("missing score".into()))?;
            row.push(DirectionalScores {
                hyp_given_ref: sc.a_given_b.unwrap_or(sc.value),
                ref_given_hyp: sc.b_given_a.unwrap_or(sc.value),
            });
        }
        out.push(row);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageScores {
    pub language: String,
    pub metric: Vec<f64>,
    pub human: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageTau {
    pub language: String,
    pub samples: usize,
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedLanguage {
    pub language: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageCorrelationReport {
    pub per_language: Vec<LanguageTau>,
    pub excluded: Vec<ExcludedLanguage>,
    pub mean_tau: f64,
    pub low: f64,
    pub high: f64,
}

/// Kendall tau-b per language, their unweighted mean, and a percentile
/// interval from resampling every language jointly. Languages whose
/// correlation is undefined are excluded with a warning.
pub fn per_language_correlation(
    languages: &[LanguageScores],
    config: &BootstrapConfig,
) -> Result<LanguageCorrelationReport> {
    config.validate()?;
    let mut kept = Vec::new();
    let mut per_language = Vec::new();
    let mut excluded = Vec::new();
    for l in languages {
        match kendall_tau(&l.metric, &l.human) {
            Ok(tau) => {
                per_language.push(LanguageTau {
                    language: l.language.clone(),
                    samples: l.metric.len(),
                    tau,
                });
                kept.push(l);
            }
            Err(e @ Error::UndefinedCorrelation(_)) => {
                log::warn!("excluding language {}: {e}", l.language);
                excluded.push(ExcludedLanguage {
                    language: l.language.clone(),
                    reason: e.to_string(),
                });
            }
            Err(e) => return Err(e),
        }
    }
    if kept.is_empty() {
        return Err(Error::UndefinedCorrelation(
            "no language has a defined correlation".into(),
        ));
    }
    let mean_tau = per_language.iter().map(|l| l.tau).sum::<f64>() / per_language.len() as f64;
    let values: Vec<f64> = (0..config.repetitions)
        .into_par_iter()
        .filter_map(|i| {
            let mut sum = 0.0;
            for l in &kept {
                let idx = resample_indices(&mut repetition_rng(config.seed, &l.language, i), l.metric.len());
                let m: Vec<f64> = idx.iter().map(|&j| l.metric[j]).collect();
                let h: Vec<f64> = idx.iter().map(|&j| l.human[j]).collect();
                sum += kendall_tau(&m, &h).ok()?;
            }
            Some(sum / kept.len() as f64)
        })
        .collect();
    let est = crate::stats::kendall_interval(mean_tau, values, config.alpha)?;
    Ok(LanguageCorrelationReport {
        per_language,
        excluded,
        mean_tau,
        low: est.low,
        high: est.high,
    })
}

/// Groups per-sample metric scores and adequacy values by language.
pub fn group_by_language<S: AsRef<str>>(
    samples: &[JudgedSample],
    metric_scores: &[f64],
    criteria: &[S],
) -> Result<Vec<LanguageScores>> {
    if samples.len() != metric_scores.len() {
        return Err(Error::InvalidInput("one metric score per sample required".into()));
    }
    let mut groups: BTreeMap<&str, LanguageScores> = BTreeMap::new();
    for (s, &m) in samples.iter().zip(metric_scores) {
        let g = groups.entry(s.language.as_str()).or_insert_with(|| LanguageScores {
            language: s.language.clone(),
            metric: Vec::new(),
            human: Vec::new(),
        });
        g.metric.push(m);
        g.human.push(adequacy(&s.ratings, criteria)?);
    }
    Ok(groups.into_values().collect())
}
