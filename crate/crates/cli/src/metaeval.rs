use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::Result;
use serde::Serialize;
use transim::d2t::{
    adequacy, group_by_language, multi_ref_aggregate, per_language_correlation, Direction, LanguageCorrelationReport,
};
use transim::datasets::load_judged_samples;
use transim::stats::{boot_both_ci, correlation_ci, CorrelationEstimate, ResampleAxes};
use transim::Error;

use crate::backends::Backends;
use crate::config::RunConfig;
use crate::measures::{build_measures, directional_scores};
use crate::output::{to_json_bytes, write_atomic, ReportHeader};

#[derive(Debug, Serialize)]
struct Entry {
    measure: String,
    direction: Direction,
    signature: String,
    #[serde(flatten)]
    languages: LanguageCorrelationReport,
    global: CorrelationEstimate,
}

#[derive(Debug, Serialize)]
struct Report<'a> {
    #[serde(flatten)]
    header: &'a ReportHeader,
    samples: usize,
    criteria: &'a [String],
    resample: ResampleAxes,
    results: Vec<Entry>,
}

#[derive(Debug, Serialize)]
struct SampleRecord<'a> {
    doc_id: &'a str,
    system_id: &'a str,
    language: &'a str,
    adequacy: f64,
    scores: BTreeMap<String, f64>,
}

fn table(results: &[Entry]) -> String {
    let width = results.iter().map(|e| e.measure.len()).max().unwrap_or(0).max(7);
    let mut out = format!(
        "{:<width$}  {:<7}  {:>7}  {:>7}  {:>7}  {:>7}  langs\n",
        "measure", "dir", "tau", "low", "high", "global"
    );
    for e in results {
        out.push_str(&format!(
            "{:<width$}  {:<7}  {:>7.3}  {:>7.3}  {:>7.3}  {:>7.3}  {}\n",
            e.measure,
            e.direction.label(),
            e.languages.mean_tau,
            e.languages.low,
            e.languages.high,
            e.global.tau,
            e.languages.per_language.len()
        ));
    }
    out
}

pub fn run(config: &RunConfig, input: &Path, cache: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let started = Instant::now();
    let default_lang = config
        .default_lang
        .as_deref()
        .unwrap_or(&config.metaeval.default_language);
    let samples = load_judged_samples(input, default_lang)?;
    if samples.is_empty() {
        return Err(Error::Data(format!("{} holds no judged samples", input.display())).into());
    }
    let criteria = &config.metaeval.criteria;
    let human = samples
        .iter()
        .map(|s| adequacy(&s.ratings, criteria))
        .collect::<transim::Result<Vec<f64>>>()?;
    let systems: Vec<String> = samples.iter().map(|s| s.system_id.clone()).collect();
    let items: Vec<String> = samples.iter().map(|s| s.doc_id.clone()).collect();

    let backends = Backends::open(&config.backend, cache)?;
    let measures = build_measures(config, &backends)?;
    let boot = config.bootstrap();

    let mut results = Vec::new();
    let mut per_sample: Vec<BTreeMap<String, f64>> = vec![BTreeMap::new(); samples.len()];
    for m in &measures {
        let scores = directional_scores(m, &samples, &backends)?;
        for &direction in &config.metaeval.directions {
            let metric = scores
                .iter()
                .map(|refs| multi_ref_aggregate(refs, direction))
                .collect::<transim::Result<Vec<f64>>>()?;
            let scope = format!("{}/{}", m.id, direction.label());
            let languages = per_language_correlation(&group_by_language(&samples, &metric, criteria)?, &boot)?;
            let global = match boot.axes {
                ResampleAxes::Samples => correlation_ci(&metric, &human, &boot, &scope)?,
                ResampleAxes::SamplesAndSystems => boot_both_ci(&metric, &human, &systems, &items, &boot, &scope)?,
            };
            for (rec, v) in per_sample.iter_mut().zip(&metric) {
                rec.insert(scope.clone(), *v);
            }
            results.push(Entry {
                measure: m.id.clone(),
                direction,
                signature: m.signature.clone(),
                languages,
                global,
            });
        }
    }
    results.sort_by(|a, b| {
        b.languages
            .mean_tau
            .total_cmp(&a.languages.mean_tau)
            .then_with(|| a.measure.cmp(&b.measure))
            .then_with(|| a.direction.label().cmp(b.direction.label()))
    });

    let signatures = measures.iter().map(|m| (m.id.clone(), m.signature.clone())).collect();
    let header = ReportHeader::new(config, &backends.info, signatures);
    let text = table(&results);
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let mut lines = Vec::new();
            for ((s, h), scores) in samples.iter().zip(&human).zip(per_sample) {
                let rec = SampleRecord {
                    doc_id: &s.doc_id,
                    system_id: &s.system_id,
                    language: &s.language,
                    adequacy: *h,
                    scores,
                };
                serde_json::to_writer(&mut lines, &rec)?;
                lines.push(b'\n');
            }
            let report = Report {
                header: &header,
                samples: samples.len(),
                criteria,
                resample: boot.axes,
                results,
            };
            write_atomic(&dir.join("report.json"), &to_json_bytes(&report))?;
            write_atomic(&dir.join("scores.jsonl"), &lines)?;
            write_atomic(&dir.join("table.txt"), text.as_bytes())?;
        }
        None => print!("{text}"),
    }
    eprintln!(
        "{}",
        serde_json::json!({ "summary": { "samples": samples.len(), "seconds": started.elapsed().as_secs_f64() } })
    );
    Ok(())
}
