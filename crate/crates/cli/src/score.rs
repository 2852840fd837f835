use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;
use std::time::Instant;

use anyhow::Result;
use serde::Serialize;
use transim::datasets::read_pairs_jsonl;
use transim::Error;

use crate::backends::Backends;
use crate::config::RunConfig;
use crate::measures::{build_measures, score_measure};
use crate::output::write_atomic;

#[derive(Debug, Serialize)]
struct ScoredRecord<'a> {
    id: &'a str,
    score: f64,
    signature: &'a str,
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    pairs: usize,
    measure: &'a str,
    signature: &'a str,
    seconds: f64,
    ms_per_pair: f64,
}

pub fn run(config: &RunConfig, input: &Path, cache: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let file = File::open(input).map_err(|e| Error::Data(format!("cannot open {}: {e}", input.display())))?;
    let mut pairs = read_pairs_jsonl(BufReader::new(file), &input.display().to_string())?;
    for (i, p) in pairs.iter_mut().enumerate() {
        if p.id.is_none() {
            p.id = Some((i + 1).to_string());
        }
        if let Some(lang) = &config.default_lang {
            p.lang_a.get_or_insert_with(|| lang.clone());
            p.lang_b.get_or_insert_with(|| lang.clone());
        }
    }

    let backends = Backends::open(&config.backend, cache)?;
    let measures = build_measures(config, &backends)?;
    let [measure] = measures.as_slice() else {
        return Err(Error::Config(format!("score takes exactly one measure, got {}", measures.len())).into());
    };

    let started = Instant::now();
    let scores = score_measure(measure, &pairs, &backends)?;
    let seconds = started.elapsed().as_secs_f64();

    let mut buf = Vec::new();
    for (p, score) in pairs.iter().zip(&scores) {
        let rec = ScoredRecord {
            id: p.id.as_deref().unwrap_or_default(),
            score: *score,
            signature: &measure.signature,
        };
        serde_json::to_writer(&mut buf, &rec)?;
        buf.push(b'\n');
    }
    match out {
        Some(path) => write_atomic(path, &buf)?,
        None => std::io::stdout().write_all(&buf)?,
    }

    let summary = Summary {
        pairs: pairs.len(),
        measure: &measure.id,
        signature: &measure.signature,
        seconds,
        ms_per_pair: if pairs.is_empty() {
            0.0
        } else {
            1000.0 * seconds / pairs.len() as f64
        },
    };
    let mut extra = BTreeMap::new();
    if let Some(c) = &backends.cache {
        extra.insert("cache_entries", c.len());
    }
    eprintln!("{}", serde_json::json!({ "summary": summary, "cache": extra }));
    Ok(())
}
