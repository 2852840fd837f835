use std::io::Cursor;
use std::sync::Arc;

use proptest::prelude::*;
use transim::backend::{CachedBackend, ScoreCache, ToyBackend, ToyModelSpec, TranslationBackend};
use transim::baselines::{
    chrf, chrf_precision_recall, mean_pooled_cosine, sent_bleu, symmetric_surface, token_aggregation_f1, BleuConfig,
    ChrfConfig, SurfaceMetric, TokenEmbeddingMatrix,
};
use transim::benchmark::{accuracy, auc, tune_threshold};
use transim::d2t::{multi_ref_score, Direction, DirectionalScores};
use transim::datasets::{build_crosslingual_pairs, read_pairs_jsonl, write_pairs_jsonl, BinarizationRule};
use transim::{score_pairs, MeasureConfig, ScoreDirection, SegmentPair};

fn sentence() -> impl Strategy<Value = String> {
    prop::collection::vec(1u32..=10, 1..=6)
        .prop_map(|ix| ix.iter().map(|i| format!("w{i}")).collect::<Vec<_>>().join(" "))
}

fn measure() -> impl Strategy<Value = MeasureConfig> {
    prop_oneof![
        Just(MeasureConfig::direct("toy")),
        Just(MeasureConfig::pivot("toy", "L2")),
        Just(MeasureConfig::cross("toy", "L3")),
    ]
}

fn pair(a: &str, b: &str) -> SegmentPair {
    SegmentPair::new(a, b).with_langs("L1", "L1")
}

fn one(p: SegmentPair, cfg: &MeasureConfig, backend: &dyn TranslationBackend) -> transim::SimilarityScore {
    score_pairs(&[p], cfg, backend).unwrap().remove(0)
}

fn text() -> impl Strategy<Value = String> {
    "[ab ]{0,8}"
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn normalized_self_similarity_is_one(a in sentence(), cfg in measure()) {
        let backend = ToyBackend::default();
        prop_assert_eq!(one(pair(&a, &a), &cfg, &backend).value, 1.0);
    }

    #[test]
    fn symmetric_scores_ignore_argument_order(a in sentence(), b in sentence(), cfg in measure(), normalized: bool) {
        let backend = ToyBackend::default();
        let cfg = cfg.normalized(normalized);
        let ab = one(pair(&a, &b), &cfg, &backend);
        let ba = one(pair(&b, &a), &cfg, &backend);
        prop_assert!((ab.value - ba.value).abs() <= 1e-12);
        prop_assert_eq!(ab.value, 0.5 * ab.a_given_b.unwrap() + 0.5 * ab.b_given_a.unwrap());
    }

    #[test]
    fn directed_scores_make_up_the_symmetric_score(a in sentence(), b in sentence(), cfg in measure()) {
        let backend = ToyBackend::default();
        let sym = one(pair(&a, &b), &cfg, &backend).value;
        let ab = one(pair(&a, &b), &cfg.clone().direction(ScoreDirection::AGivenB), &backend).value;
        let ba = one(pair(&a, &b), &cfg.direction(ScoreDirection::BGivenA), &backend).value;
        prop_assert_eq!(sym, 0.5 * ab + 0.5 * ba);
    }

    #[test]
    fn unnormalized_scores_are_probabilities(a in sentence(), b in sentence(), cfg in measure()) {
        let backend = ToyBackend::default();
        let v = one(pair(&a, &b), &cfg.normalized(false), &backend).value;
        prop_assert!(v > 0.0 && v <= 1.0);
    }

    #[test]
    fn cross_ignores_language_tags(a in sentence(), b in sentence()) {
        let backend = ToyBackend::default();
        let cfg = MeasureConfig::cross("toy", "L2");
        let tagged = one(pair(&a, &b), &cfg, &backend).value;
        let bare = one(SegmentPair::new(a, b), &cfg, &backend).value;
        prop_assert_eq!(tagged, bare);
    }

    #[test]
    fn toy_is_deterministic_and_consistent(a in sentence()) {
        let backend = ToyBackend::default();
        let texts = vec![a.clone()];
        let t1 = backend.translate(&texts, "L2").unwrap();
        let t2 = backend.translate(&texts, "L2").unwrap();
        prop_assert_eq!(&t1, &t2);
        let s = backend.force_decode_score(&texts, &t1, "L2").unwrap();
        let match_lp = (1.0 - ToyModelSpec::default().noise).ln();
        prop_assert!(s[0].token_logprobs().iter().all(|&lp| lp == match_lp));
    }

    #[test]
    fn cache_is_transparent(
        pairs in prop::collection::vec((sentence(), sentence()), 1..8),
        cfg in measure(),
    ) {
        let pairs: Vec<SegmentPair> = pairs.iter().map(|(a, b)| pair(a, b)).collect();
        let plain = score_pairs(&pairs, &cfg, &ToyBackend::default()).unwrap();
        let cached = CachedBackend::new(ToyBackend::default(), Arc::new(ScoreCache::in_memory()));
        let cold = score_pairs(&pairs, &cfg, &cached).unwrap();
        let calls = cached.inner().calls();
        let warm = score_pairs(&pairs, &cfg, &cached).unwrap();
        prop_assert_eq!(cached.inner().calls(), calls);
        for ((p, c), w) in plain.iter().zip(&cold).zip(&warm) {
            prop_assert_eq!(p.value.to_bits(), c.value.to_bits());
            prop_assert_eq!(p.value.to_bits(), w.value.to_bits());
        }
    }

    #[test]
    fn surface_scores_are_bounded(h in text(), r in text()) {
        let c = chrf(&h, &r, &ChrfConfig::default());
        let b = sent_bleu(&h, &r, &BleuConfig::default());
        prop_assert!((0.0..=100.0).contains(&c));
        prop_assert!((0.0..=100.0 + 1e-9).contains(&b));
        if !h.trim().is_empty() {
            prop_assert_eq!(chrf(&h, &h, &ChrfConfig::default()), 100.0);
            prop_assert!((sent_bleu(&h, &h, &BleuConfig::default()) - 100.0).abs() < 1e-9);
        }
    }

    #[test]
    fn chrf_precision_and_recall_swap(h in text(), r in text()) {
        let cfg = ChrfConfig::default();
        let (p, rc) = chrf_precision_recall(&h, &r, &cfg);
        let (p2, rc2) = chrf_precision_recall(&r, &h, &cfg);
        prop_assert_eq!(p, rc2);
        prop_assert_eq!(rc, p2);
        let metric = SurfaceMetric::Chrf(cfg);
        prop_assert_eq!(symmetric_surface(&metric, &h, &r), symmetric_surface(&metric, &r, &h));
    }

    #[test]
    fn single_row_f1_equals_pooled_cosine(
        a in prop::collection::vec(-5.0f64..5.0, 4),
        b in prop::collection::vec(-5.0f64..5.0, 4),
    ) {
        prop_assume!(a.iter().any(|x| x.abs() > 1e-3) && b.iter().any(|x| x.abs() > 1e-3));
        let ma = TokenEmbeddingMatrix::new(vec![a]).unwrap();
        let mb = TokenEmbeddingMatrix::new(vec![b]).unwrap();
        let f1 = token_aggregation_f1(&ma, &mb).unwrap();
        let cos = mean_pooled_cosine(&ma, &mb).unwrap();
        prop_assert!((f1 - cos).abs() < 1e-12);
    }

    #[test]
    fn pairs_round_trip_through_jsonl(
        rows in prop::collection::vec((text(), text(), prop::option::of(any::<bool>()), prop::option::of("[a-z]{2}")), 0..6),
    ) {
        let pairs: Vec<SegmentPair> = rows
            .iter()
            .enumerate()
            .map(|(i, (a, b, label, lang))| SegmentPair {
                id: Some(i.to_string()),
                text_a: a.clone(),
                text_b: b.clone(),
                lang_a: lang.clone(),
                lang_b: lang.clone(),
                label: *label,
            })
            .collect();
        let mut buf = Vec::new();
        write_pairs_jsonl(&pairs, &mut buf).unwrap();
        prop_assert_eq!(read_pairs_jsonl(Cursor::new(buf), "mem").unwrap(), pairs);
    }

    #[test]
    fn crosslingual_doubles_and_keeps_ratio(labels in prop::collection::vec(any::<bool>(), 0..30)) {
        let make = |l: &str| -> Vec<SegmentPair> {
            labels
                .iter()
                .enumerate()
                .map(|(i, &y)| SegmentPair::new(format!("{l}{i}a"), format!("{l}{i}b")).with_label(y).with_id(i.to_string()))
                .collect()
        };
        let (out, _) = build_crosslingual_pairs(&make("en"), &make("de")).unwrap();
        let pos = labels.iter().filter(|&&y| y).count();
        prop_assert_eq!(out.len(), 2 * labels.len());
        prop_assert_eq!(out.iter().filter(|p| p.label == Some(true)).count(), 2 * pos);
    }

    #[test]
    fn binarization_is_total_and_deterministic(x in -10.0f64..10.0, t in -5.0f64..5.0, pick in 0usize..3) {
        let rule = BinarizationRule::ThresholdGeq { threshold: t };
        let raw = format!("{x}");
        prop_assert_eq!(rule.apply(&raw).unwrap(), x >= t);
        prop_assert_eq!(rule.apply(&raw), rule.apply(&raw));
        let merge = BinarizationRule::MergeClasses {
            positive: vec!["p".into()],
            negative: vec!["n".into(), "m".into()],
        };
        let label = ["p", "n", "m"][pick];
        prop_assert_eq!(merge.apply(label).unwrap(), pick == 0);
    }

    #[test]
    fn tuned_threshold_is_optimal(data in prop::collection::vec((0u8..6, any::<bool>()), 2..=12)) {
        let scores: Vec<f64> = data.iter().map(|(s, _)| f64::from(*s)).collect();
        let labels: Vec<bool> = data.iter().map(|(_, y)| *y).collect();
        prop_assume!(labels.iter().any(|&y| y) && labels.iter().any(|&y| !y));
        let choice = tune_threshold(&scores, &labels).unwrap();
        let best = [-1.0, 0.5, 1.5, 2.5, 3.5, 4.5, 5.5, 9.0]
            .iter()
            .map(|&t| accuracy(&scores, &labels, t).unwrap())
            .fold(0.0, f64::max);
        prop_assert_eq!(choice.accuracy, best);
        prop_assert_eq!(accuracy(&scores, &labels, choice.threshold).unwrap(), best);
        let errors = scores.iter().zip(&labels).filter(|(s, y)| (**s >= choice.threshold) != **y).count();
        prop_assert!((choice.accuracy + errors as f64 / scores.len() as f64 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn auc_is_invariant_under_monotone_maps(data in prop::collection::vec((0u8..8, any::<bool>()), 2..=12)) {
        let labels: Vec<bool> = data.iter().map(|(_, y)| *y).collect();
        prop_assume!(labels.iter().any(|&y| y) && labels.iter().any(|&y| !y));
        let scores: Vec<f64> = data.iter().map(|(s, _)| f64::from(*s)).collect();
        let mapped: Vec<f64> = scores.iter().map(|s| (s * 0.7).exp() - 3.0).collect();
        prop_assert_eq!(auc(&scores, &labels).unwrap(), auc(&mapped, &labels).unwrap());
    }

    #[test]
    fn average_direction_is_mean_for_one_reference(h in "[ab]{1,6}", r in "[ab]{1,6}") {
        let metric = |x: &str, y: &str| -> transim::Result<DirectionalScores> {
            Ok(DirectionalScores {
                hyp_given_ref: chrf(x, y, &ChrfConfig::default()),
                ref_given_hyp: chrf(y, x, &ChrfConfig::default()),
            })
        };
        let refs = vec![r.clone()];
        let avg = multi_ref_score(metric, &h, &refs, Direction::Average).unwrap();
        let fwd = multi_ref_score(metric, &h, &refs, Direction::HypGivenRef).unwrap();
        let bwd = multi_ref_score(metric, &h, &refs, Direction::RefGivenHyp).unwrap();
        prop_assert!((avg - 0.5 * (fwd + bwd)).abs() < 1e-12);
    }
}
