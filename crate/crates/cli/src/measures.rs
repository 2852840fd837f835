//! Measure selection by id and batch scoring of segment pairs.

use std::collections::HashMap;

use rayon::prelude::*;
use transim::baselines::{
    embedding_signature, mean_pooled_cosine, symmetric_surface, token_aggregation_f1, SurfaceMetric,
    TokenEmbeddingMatrix,
};
use transim::d2t::DirectionalScores;
use transim::measures::version_signature_with_decoding;
use transim::{score_pairs, Error, MeasureConfig, Result, ScoreDirection, SegmentPair};

use crate::backends::Backends;
use crate::config::RunConfig;

pub const MEASURE_IDS: [&str; 7] = [
    "nmt-direct",
    "nmt-pivot",
    "nmt-cross",
    "chrf",
    "bleu",
    "embed-cosine",
    "embed-f1",
];

#[derive(Debug, Clone, PartialEq)]
pub enum MeasureKind {
    Nmt(MeasureConfig),
    Surface(SurfaceMetric),
    EmbedCosine,
    EmbedF1,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureSpec {
    pub id: String,
    pub kind: MeasureKind,
    pub direction: ScoreDirection,
    pub signature: String,
}

/// Expands the configured measure ids (plus ablation variants) into specs.
pub fn build_measures(config: &RunConfig, backends: &Backends) -> Result<Vec<MeasureSpec>> {
    let direction: ScoreDirection = config.nmt.direction.into();
    let info = &backends.info;
    let ablate = config.ablation.iter().any(|a| a == "normalize");
    let nmt_spec = |id: &str, base: MeasureConfig| -> Vec<MeasureSpec> {
        let normalize = config.nmt.normalize;
        let variants = if ablate {
            vec![normalize, !normalize]
        } else {
            vec![normalize]
        };
        variants
            .into_iter()
            .map(|normalized| {
                let cfg = base.clone().normalized(normalized).direction(direction);
                let id = match (normalized == normalize, normalized) {
                    (true, _) => id.to_string(),
                    (false, true) => format!("{id}-normalized"),
                    (false, false) => format!("{id}-unnormalized"),
                };
                let signature = version_signature_with_decoding(
                    &cfg,
                    &info.stack_version,
                    transim::TOOL_VERSION,
                    Some(&config.backend.decoding),
                );
                MeasureSpec {
                    id,
                    kind: MeasureKind::Nmt(cfg),
                    direction,
                    signature,
                }
            })
            .collect()
    };
    let embed_sig = embedding_signature(&info.embedder, config.backend.embedder_layer, env!("CARGO_PKG_VERSION"));
    let mut out = Vec::new();
    for id in &config.measures {
        let model = info.model.clone();
        match id.as_str() {
            "nmt-direct" => out.extend(nmt_spec(id, MeasureConfig::direct(model))),
            "nmt-pivot" => {
                let lang = config
                    .nmt
                    .pivot_lang
                    .clone()
                    .ok_or_else(|| Error::Config("nmt-pivot needs a pivot language (--pivot-lang)".into()))?;
                out.extend(nmt_spec(id, MeasureConfig::pivot(model, lang)));
            }
            "nmt-cross" => {
                let lang = config
                    .nmt
                    .target_lang
                    .clone()
                    .ok_or_else(|| Error::Config("nmt-cross needs a target language (--tgt-lang)".into()))?;
                out.extend(nmt_spec(id, MeasureConfig::cross(model, lang)));
            }
            "chrf" | "bleu" => {
                let metric = if id == "chrf" {
                    SurfaceMetric::Chrf(config.chrf.clone())
                } else {
                    SurfaceMetric::Bleu(config.bleu.clone())
                };
                out.push(MeasureSpec {
                    id: id.clone(),
                    signature: metric.signature(env!("CARGO_PKG_VERSION")),
                    kind: MeasureKind::Surface(metric),
                    direction,
                });
            }
            "embed-cosine" | "embed-f1" => out.push(MeasureSpec {
                id: id.clone(),
                kind: if id == "embed-cosine" {
                    MeasureKind::EmbedCosine
                } else {
                    MeasureKind::EmbedF1
                },
                direction: ScoreDirection::Symmetric,
                signature: embed_sig.clone(),
            }),
            other => {
                return Err(Error::Config(format!(
                    "unknown measure {other:?}; expected one of {}",
                    MEASURE_IDS.join(", ")
                )))
            }
        }
    }
    let mut seen = std::collections::HashSet::new();
    if let Some(dup) = out.iter().find(|m| !seen.insert(m.id.clone())) {
        return Err(Error::Config(format!("measure {} selected twice", dup.id)));
    }
    Ok(out)
}

/// Scores every pair with one measure, in input order.
pub fn score_measure(spec: &MeasureSpec, pairs: &[SegmentPair], backends: &Backends) -> Result<Vec<f64>> {
    if pairs.is_empty() {
        return Ok(Vec::new());
    }
    match &spec.kind {
        MeasureKind::Nmt(cfg) => Ok(score_pairs(pairs, cfg, backends.translation.as_ref())?
            .into_iter()
            .map(|s| s.value)
            .collect()),
        MeasureKind::Surface(metric) => Ok(pairs
            .par_iter()
            .map(|p| match spec.direction {
                ScoreDirection::AGivenB => metric.score(&p.text_a, &p.text_b),
                ScoreDirection::BGivenA => metric.score(&p.text_b, &p.text_a),
                ScoreDirection::Symmetric => symmetric_surface(metric, &p.text_a, &p.text_b),
            })
            .collect()),
        MeasureKind::EmbedCosine | MeasureKind::EmbedF1 => {
            let texts: Vec<String> = pairs
                .iter()
                .flat_map(|p| [p.text_a.clone(), p.text_b.clone()])
                .collect();
            let embeddings = embed_unique(&texts, backends)?;
            pairs
                .iter()
                .map(|p| {
                    let (a, b) = (&embeddings[&p.text_a], &embeddings[&p.text_b]);
                    if spec.kind == MeasureKind::EmbedCosine {
                        mean_pooled_cosine(a, b)
                    } else {
                        token_aggregation_f1(a, b)
                    }
                })
                .collect()
        }
    }
}

fn embed_unique(texts: &[String], backends: &Backends) -> Result<HashMap<String, TokenEmbeddingMatrix>> {
    let mut unique: Vec<String> = texts.to_vec();
    unique.sort();
    unique.dedup();
    let embedded = backends.embedding.embed(&unique)?;
    Ok(unique.into_iter().zip(embedded.into_iter().map(|e| e.tokens)).collect())
}

/// Hypothesis/reference scores in both directions for every reference of
/// every sample. `result[i][r]` belongs to sample `i`, reference `r`.
pub fn directional_scores(
    spec: &MeasureSpec,
    samples: &[transim::d2t::JudgedSample],
    backends: &Backends,
) -> Result<Vec<Vec<DirectionalScores>>> {
    match &spec.kind {
        MeasureKind::Nmt(cfg) => transim::d2t::nmt_directional_scores(samples, cfg, backends.translation.as_ref()),
        MeasureKind::Surface(metric) => Ok(samples
            .par_iter()
            .map(|s| {
                s.references
                    .iter()
                    .map(|r| DirectionalScores {
                        hyp_given_ref: metric.score(&s.hypothesis, r),
                        ref_given_hyp: metric.score(r, &s.hypothesis),
                    })
                    .collect()
            })
            .collect()),
        MeasureKind::EmbedCosine | MeasureKind::EmbedF1 => {
            let pairs: Vec<SegmentPair> = samples
                .iter()
                .flat_map(|s| {
                    s.references
                        .iter()
                        .map(|r| SegmentPair::new(s.hypothesis.clone(), r.clone()))
                })
                .collect();
            let flat = score_measure(spec, &pairs, backends)?;
            let mut it = flat.into_iter();
            Ok(samples
                .iter()
                .map(|s| {
                    s.references
                        .iter()
                        .map(|_| {
                            let v = it.next().expect("one score per reference");
                            DirectionalScores {
                                hyp_given_ref: v,
                                ref_given_hyp: v,
                            }
                        })
                        .collect()
                })
                .collect())
        }
    }
}
