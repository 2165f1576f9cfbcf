mod common;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dvcseq::baselines::{random_segmentation, BaselineConfig};
use dvcseq::codec::{decode, encode};
use dvcseq::corpus::{extract_wikihow, WikiHowArticle, WikiHowStep};
use dvcseq::metrics::{
    bleu4, caption_tokens, cider_d, evaluate, rouge_l, Aggregation, CaptionMetric, EvalConfig, IouBasis,
    VideoPrediction,
};
use dvcseq::{AsrTranscript, CodecConfig, Formulation, FrameTimeline, Mode, Segment, Setting, VideoAnnotation64};

fn ngrams(tokens: &[String], n: usize) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    if tokens.len() >= n {
        for i in 0..=tokens.len() - n {
            *out.entry(tokens[i..i + n].join(" ")).or_insert(0.0) += 1.0;
        }
    }
    out
}

fn cider_oracle(pairs: &[(&str, &str)], sigma: f64) -> Vec<f64> {
    let toks: Vec<(Vec<String>, Vec<String>)> = pairs
        .iter()
        .map(|(h, r)| (caption_tokens(h), caption_tokens(r)))
        .collect();
    let big_n = pairs.len() as f64;
    toks.iter()
        .map(|(h, r)| {
            let mut total = 0.0;
            for n in 1..=4 {
                let weight = |gram: &String| {
                    let df = toks.iter().filter(|(_, rr)| ngrams(rr, n).contains_key(gram)).count() as f64;
                    ((1.0 + big_n) / (1.0 + df)).ln() + 1.0
                };
                let vh: BTreeMap<String, f64> = ngrams(h, n)
                    .into_iter()
                    .map(|(g, c)| {
                        let w = c * weight(&g);
                        (g, w)
                    })
                    .collect();
                let vr: BTreeMap<String, f64> = ngrams(r, n)
                    .into_iter()
                    .map(|(g, c)| {
                        let w = c * weight(&g);
                        (g, w)
                    })
                    .collect();
                let nh = vh.values().map(|w| w * w).sum::<f64>().sqrt();
                let nr = vr.values().map(|w| w * w).sum::<f64>().sqrt();
                if nh == 0.0 || nr == 0.0 {
                    continue;
                }
                let dot: f64 = vh.iter().filter_map(|(g, w)| vr.get(g).map(|rw| w.min(*rw) * rw)).sum();
                let delta = h.len() as f64 - r.len() as f64;
                total += dot / (nh * nr) * (-delta * delta / (2.0 * sigma * sigma)).exp();
            }
            total / 4.0 * 10.0
        })
        .collect()
}

#[test]
fn cider_matches_brute_force() {
    let pairs = [
        ("whisk the eggs in the deep plate", "whisk eggs and season with salt"),
        (
            "chop garlic and place in the food processor",
            "chop up the garlic in the food processer",
        ),
        ("Blow-drying hair", "Blow-drying the roots"),
    ];
    let got = cider_d(&pairs, 6.0f64).unwrap();
    let want = cider_oracle(&pairs, 6.0);
    for (g, w) in got.per_pair.iter().zip(&want) {
        assert!((g - w).abs() < 1e-12, "{g} vs {w}");
    }
    assert!((got.mean - want.iter().sum::<f64>() / 3.0).abs() < 1e-12);
    // sharing a reference n-gram across documents lowers its weight
    assert!(got.per_pair.iter().all(|&v| v > 0.0 && v < 10.0));
}

fn random_captioned(rng: &mut ChaCha8Rng, max: usize) -> Vec<Segment<f64>> {
    let mut segs = common::random_segments(rng, max);
    for s in &mut segs {
        s.caption = Some(common::words(rng, 1, 8).join(" "));
    }
    segs
}

fn best_match(g: &Segment<f64>, pred: &[Segment<f64>], t: f64) -> Option<usize> {
    let b = |s: &Segment<f64>| (s.start.get(), s.end.get());
    let mut best: Option<(usize, f64)> = None;
    for (j, p) in pred.iter().enumerate() {
        let v = common::iou_oracle(b(g), b(p));
        if best.is_none() || v > best.unwrap().1 {
            best = Some((j, v));
        }
    }
    best.filter(|&(_, v)| v >= t).map(|(j, _)| j)
}

#[test]
fn evaluate_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let thresholds = [0.3, 0.5, 0.7, 0.9];
    let mut gold = Vec::new();
    let mut preds = Vec::new();
    for i in 0..10 {
        let segs = loop {
            let s = random_captioned(&mut rng, 6);
            if !s.is_empty() {
                break s;
            }
        };
        let id = format!("v{i}");
        gold.push(VideoAnnotation64 {
            segments: segs,
            ..VideoAnnotation64::new(
                id.clone(),
                100.0,
                AsrTranscript::default(),
                FrameTimeline::new(1.0, 1),
                vec![],
            )
        });
        preds.push(VideoPrediction {
            video_id: id,
            segments: random_captioned(&mut rng, 8),
        });
    }

    for aggregation in [Aggregation::Macro, Aggregation::Micro] {
        let cfg = EvalConfig {
            caption_metrics: vec![CaptionMetric::Bleu4, CaptionMetric::RougeL],
            aggregation,
            ..EvalConfig::new(IouBasis::Timestamp)
        };
        let report = evaluate(&gold, &preds, &cfg).unwrap();

        let want_miou = gold
            .iter()
            .zip(&preds)
            .map(|(g, p)| common::miou_oracle(&g.segments, &p.segments))
            .sum::<f64>()
            / 10.0;
        assert!((report.miou - want_miou).abs() < 1e-12);

        let mut f1s = Vec::new();
        for (ti, &t) in thresholds.iter().enumerate() {
            let (p, r) = match aggregation {
                Aggregation::Macro => {
                    let pr: Vec<(f64, f64)> = gold
                        .iter()
                        .zip(&preds)
                        .map(|(g, p)| common::pr_oracle(&g.segments, &p.segments, t))
                        .collect();
                    (
                        pr.iter().map(|x| x.0).sum::<f64>() / 10.0,
                        pr.iter().map(|x| x.1).sum::<f64>() / 10.0,
                    )
                }
                Aggregation::Micro => {
                    let b = |s: &Segment<f64>| (s.start.get(), s.end.get());
                    let hits = |xs: &[Segment<f64>], ys: &[Segment<f64>]| {
                        xs.iter()
                            .filter(|x| ys.iter().any(|y| common::iou_oracle(b(x), b(y)) >= t))
                            .count()
                    };
                    let (mut mp, mut np, mut mg, mut ng) = (0, 0, 0, 0);
                    for (g, p) in gold.iter().zip(&preds) {
                        mp += hits(&p.segments, &g.segments);
                        np += p.segments.len();
                        mg += hits(&g.segments, &p.segments);
                        ng += g.segments.len();
                    }
                    (if np == 0 { 0.0 } else { mp as f64 / np as f64 }, mg as f64 / ng as f64)
                }
            };
            let s = &report.per_threshold[ti];
            assert!(
                (s.precision - p).abs() < 1e-12 && (s.recall - r).abs() < 1e-12,
                "{aggregation:?} t={t}"
            );
            assert!((s.f1 - (p * r).sqrt()).abs() < 1e-12);
            f1s.push(s.f1);
        }
        assert!((report.avg_f1 - f1s.iter().sum::<f64>() / 4.0).abs() < 1e-12);

        type Scorer = fn(&str, &str) -> f64;
        let scorers: [(&str, Scorer); 2] = [("bleu4", |h, r| bleu4(h, r)), ("rouge_l", |h, r| rouge_l(h, r, 1.2))];
        for (name, score) in scorers {
            let mut per_thr = 0.0;
            for &t in &thresholds {
                let mut per_video = 0.0;
                for (g, p) in gold.iter().zip(&preds) {
                    let total: f64 = g
                        .segments
                        .iter()
                        .map(|gs| match best_match(gs, &p.segments, t) {
                            Some(j) => score(
                                p.segments[j].caption.as_deref().unwrap(),
                                gs.caption.as_deref().unwrap(),
                            ),
                            None => 0.0,
                        })
                        .sum();
                    per_video += total / g.segments.len() as f64;
                }
                per_thr += per_video / 10.0;
            }
            assert!((report.caption_scores[name] - per_thr / 4.0).abs() < 1e-12, "{name}");
        }
    }
}

#[test]
fn wikihow_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for cfg in CodecConfig::all()
        .into_iter()
        .filter(|c| c.setting == Setting::Partition)
    {
        for a in 0..100 {
            let n = rng.random_range(1..120);
            let mut steps = Vec::new();
            let mut i = 0;
            while i < n {
                let l = rng.random_range(1..=20.min(n - i));
                steps.push(WikiHowStep {
                    start_token: i,
                    end_token: i + l,
                    summary: common::words(&mut rng, 1, 6).join(" "),
                });
                i += l;
            }
            let article = WikiHowArticle {
                article_id: format!("a{a}"),
                body_tokens: common::words(&mut rng, n, n),
                steps,
            };
            let x = extract_wikihow::<f64>(&article, &cfg).unwrap();
            assert!(x.warnings.is_empty());
            assert_eq!(encode(&x.annotation, &cfg).unwrap(), x.target);
            let report = decode(&x.target, &x.annotation.transcript, &cfg).unwrap();
            assert!(report.warnings.is_empty(), "{cfg}: {:?}", report.warnings);
            let got: Vec<(usize, usize)> = report.spans.iter().map(|s| (s.start, s.end)).collect();
            let want: Vec<(usize, usize)> = article.steps.iter().map(|s| (s.start_token, s.end_token)).collect();
            assert_eq!(got, want, "{cfg}");
            if cfg.formulation == Formulation::Length && cfg.mode == Mode::SegCap {
                for (span, step) in report.spans.iter().zip(&article.steps) {
                    assert_eq!(span.caption.as_deref(), Some(step.summary.as_str()));
                }
            }
        }
    }
}

#[test]
fn random_segmentation_coverage() {
    // for n segments from 2n sorted uniforms, expected covered fraction is n / (2n + 1)
    let cfg = BaselineConfig::new(17);
    let mut rng = cfg.rng();
    let draws = 40_000;
    let mut covered = 0.0;
    for _ in 0..draws {
        let segs: Vec<Segment<f64>> = random_segmentation(dvcseq::TimeMs(1.0), &cfg, &mut rng).unwrap();
        covered += segs.iter().map(|s| s.duration()).sum::<f64>();
    }
    let observed = covered / draws as f64;
    let expected = (1..=15).map(|n| n as f64 / (2 * n + 1) as f64).sum::<f64>() / 15.0;
    assert!((observed - expected).abs() < 0.005, "{observed} vs {expected}");
}
