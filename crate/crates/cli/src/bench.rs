use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::Result;
use rayon::prelude::*;
use serde::Serialize;
use transim::benchmark::{evaluate_benchmark, BenchmarkReport, DatasetScores, ScoreMatrix};
use transim::datasets::{
    build_crosslingual_pairs, load_pairs, CrosslingualReport, DatasetSpec, LoadReport, LoadedDataset, Split,
};
use transim::stats::StatsReport;
use transim::Error;

use crate::backends::Backends;
use crate::config::{resolve, RunConfig};
use crate::measures::{build_measures, score_measure, MeasureSpec};
use crate::output::{to_json_bytes, write_atomic, ReportHeader};

#[derive(Debug, Serialize)]
struct LoadedSplit {
    dataset: String,
    split: Split,
    report: LoadReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    paired: Option<PairedLoad>,
}

#[derive(Debug, Serialize)]
struct PairedLoad {
    report: LoadReport,
    crosslingual: CrosslingualReport,
    pairs: usize,
}

#[derive(Debug, Serialize)]
struct FullReport<'a> {
    #[serde(flatten)]
    header: &'a ReportHeader,
    loaded: Vec<LoadedSplit>,
    #[serde(flatten)]
    report: &'a BenchmarkReport,
}

#[derive(Debug, Serialize)]
struct StatsFile<'a> {
    #[serde(flatten)]
    header: &'a ReportHeader,
    scopes: Vec<StatsReport>,
}

fn load_split(base: Option<&Path>, schema: &Path) -> Result<LoadedDataset> {
    let spec = DatasetSpec::from_file(&resolve(base, schema))?;
    let loaded = load_pairs(&spec)?;
    if loaded.pairs.iter().any(|p| p.label.is_none()) {
        return Err(Error::Data(format!("dataset {} has unlabelled pairs", spec.name)).into());
    }
    Ok(loaded)
}

/// Loads a split, pairing it against its aligned counterpart when one is given.
fn load_entry_split(
    base: Option<&Path>,
    dataset: &str,
    schema: &Path,
    paired: Option<&Path>,
) -> Result<(LoadedDataset, LoadedSplit)> {
    let mut split = load_split(base, schema)?;
    let paired = match paired {
        Some(other) => {
            let other = load_split(base, other)?;
            let (pairs, crosslingual) = build_crosslingual_pairs(&other.pairs, &split.pairs)?;
            split.pairs = pairs;
            Some(PairedLoad {
                report: other.report,
                crosslingual,
                pairs: split.pairs.len(),
            })
        }
        None => None,
    };
    let summary = LoadedSplit {
        dataset: dataset.to_string(),
        split: split.split,
        report: split.report.clone(),
        paired,
    };
    Ok((split, summary))
}

fn score_split(measures: &[MeasureSpec], loaded: &LoadedDataset, backends: &Backends) -> Result<ScoreMatrix> {
    let scores = measures
        .par_iter()
        .map(|m| score_measure(m, &loaded.pairs, backends))
        .collect::<transim::Result<Vec<_>>>()?;
    let ids = loaded
        .pairs
        .iter()
        .enumerate()
        .map(|(i, p)| p.id.clone().unwrap_or_else(|| (i + 1).to_string()))
        .collect();
    let labels = loaded.pairs.iter().map(|p| p.label.unwrap_or(false)).collect();
    Ok(ScoreMatrix::new(
        measures.iter().map(|m| m.id.clone()).collect(),
        ids,
        scores,
        labels,
    )?)
}

pub fn run(config: &RunConfig, config_path: Option<&Path>, cache: Option<&Path>, out: Option<&Path>) -> Result<()> {
    if config.datasets.is_empty() {
        return Err(Error::Config("benchmark needs at least one [[datasets]] entry".into()).into());
    }
    let base = config_path;
    let backends = Backends::open(&config.backend, cache)?;
    let measures = build_measures(config, &backends)?;

    let started = Instant::now();
    let mut loaded_reports = Vec::new();
    let mut datasets = Vec::new();
    let mut timings = BTreeMap::new();
    for entry in &config.datasets {
        let t = Instant::now();
        let validation = match &entry.validation {
            Some(schema) => {
                let paired = entry.paired_with.as_ref().and_then(|p| p.validation.as_deref());
                let (split, summary) = load_entry_split(base, &entry.name, schema, paired)?;
                loaded_reports.push(summary);
                Some(score_split(&measures, &split, &backends)?)
            }
            None => None,
        };
        let paired = entry.paired_with.as_ref().map(|p| p.test.as_path());
        let (split, summary) = load_entry_split(base, &entry.name, &entry.test, paired)?;
        let test = score_split(&measures, &split, &backends)?;
        loaded_reports.push(summary);
        timings.insert(entry.name.clone(), t.elapsed().as_secs_f64());
        datasets.push(DatasetScores {
            name: entry.name.clone(),
            metric: entry.metric,
            validation,
            test,
        });
    }
    let boot = config.bootstrap();
    let report = evaluate_benchmark(&datasets, &config.macro_recipe(), &boot)?;

    let signatures = measures.iter().map(|m| (m.id.clone(), m.signature.clone())).collect();
    let header = ReportHeader::new(config, &backends.info, signatures);
    let mut scopes: Vec<StatsReport> = report
        .datasets
        .iter()
        .map(|d| StatsReport::new(d.dataset.clone(), &d.significance, &boot))
        .collect();
    scopes.push(StatsReport::new("macro", &report.macro_significance, &boot));
    let table = report.to_table();

    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let full = FullReport {
                header: &header,
                loaded: loaded_reports,
                report: &report,
            };
            write_atomic(&dir.join("report.json"), &to_json_bytes(&full))?;
            write_atomic(
                &dir.join("stats.json"),
                &to_json_bytes(&StatsFile {
                    header: &header,
                    scopes,
                }),
            )?;
            write_atomic(&dir.join("table.txt"), table.as_bytes())?;
        }
        None => print!("{table}"),
    }
    eprintln!(
        "{}",
        serde_json::json!({ "summary": { "seconds": started.elapsed().as_secs_f64(), "scoring_seconds": timings } })
    );
    Ok(())
}
