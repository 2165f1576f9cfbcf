#![allow(dead_code)]

use rand::Rng;

use dvcseq::{AsrToken, AsrTranscript, FrameTimeline, IndexSpan, Segment, VideoAnnotation64};

pub const VOCAB: &[&str] = &[
    "add", "the", "eggs", "whisk", "salt", "pan", "heat", "oil", "chop", "garlic", "onion", "stir", "until", "golden",
    "serve", "with", "rice", "boil", "water", "pour", "into", "bowl", "mix", "well", "cut", "tomatoes", "slice",
    "bread",
];

pub fn words<R: Rng>(rng: &mut R, min: usize, max: usize) -> Vec<String> {
    let n = rng.random_range(min..=max);
    (0..n)
        .map(|_| VOCAB[rng.random_range(0..VOCAB.len())].to_owned())
        .collect()
}

/// `len` tokens with positive durations and occasional silences between them.
pub fn transcript<R: Rng>(rng: &mut R, len: usize) -> AsrTranscript<f64> {
    let mut t = rng.random_range(0..2000) as f64;
    let tokens = (0..len)
        .map(|_| {
            let start = t;
            let end = start + rng.random_range(100..900) as f64;
            t = end
                + if rng.random_bool(0.3) {
                    rng.random_range(1..3000) as f64
                } else {
                    0.0
                };
            AsrToken::new(VOCAB[rng.random_range(0..VOCAB.len())], start, end)
        })
        .collect();
    AsrTranscript::new(tokens)
}

/// Sorted disjoint non-empty spans over `[0, len)`; tiling when `tile`.
pub fn spans<R: Rng>(rng: &mut R, len: usize, tile: bool) -> Vec<IndexSpan> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < len {
        if !tile && rng.random_bool(0.35) {
            i += rng.random_range(1..=4.min(len - i));
            continue;
        }
        let l = rng.random_range(1..=12.min(len - i));
        out.push(IndexSpan::new(i, i + l));
        i += l;
    }
    if out.is_empty() {
        out.push(IndexSpan::new(0, len));
    }
    out
}

/// A valid annotation whose segments cover exactly the tokens of `spans`.
pub fn annotation_from_spans<R: Rng>(
    rng: &mut R,
    id: &str,
    transcript: AsrTranscript<f64>,
    spans: &[IndexSpan],
    captions: bool,
) -> VideoAnnotation64 {
    let toks = &transcript.tokens;
    let segments = spans
        .iter()
        .map(|s| {
            let seg = Segment::new(toks[s.start].start.get(), toks[s.end - 1].end.get());
            if captions {
                seg.with_caption(words(rng, 1, 14).join(" "))
            } else {
                seg
            }
        })
        .collect();
    let duration = toks.last().map_or(1000.0, |t| t.end.get()) + rng.random_range(0..5000) as f64;
    let fps = [0.5, 1.0, 2.0][rng.random_range(0..3)];
    let count = (duration / 1000.0 * fps).ceil() as usize;
    VideoAnnotation64::new(id, duration, transcript, FrameTimeline::new(fps, count), segments)
}

pub fn random_annotation<R: Rng>(rng: &mut R, id: &str, tile: bool, captions: bool) -> VideoAnnotation64 {
    let len = rng.random_range(1..=80);
    let tr = transcript(rng, len);
    let sp = spans(rng, len, tile);
    annotation_from_spans(rng, id, tr, &sp, captions)
}

/// Random timestamp segments on `[0, 100)` for metric oracles.
pub fn random_segments<R: Rng>(rng: &mut R, max: usize) -> Vec<Segment<f64>> {
    let n = rng.random_range(0..=max);
    (0..n)
        .map(|_| {
            let a = rng.random_range(0..99) as f64;
            let b = rng.random_range(a as i64 + 1..=100) as f64;
            Segment::new(a, b)
        })
        .collect()
}

pub fn iou_oracle(a: (f64, f64), b: (f64, f64)) -> f64 {
    let inter = (a.1.min(b.1) - a.0.max(b.0)).max(0.0);
    let union = (a.1 - a.0) + (b.1 - b.0) - inter;
    if union > 0.0 {
        inter / union
    } else {
        0.0
    }
}

/// All-pairs mIoU: mean over gold of the best IoU against any prediction.
pub fn miou_oracle(gold: &[Segment<f64>], pred: &[Segment<f64>]) -> f64 {
    let bounds = |s: &Segment<f64>| (s.start.get(), s.end.get());
    let total: f64 = gold
        .iter()
        .map(|g| {
            pred.iter()
                .map(|p| iou_oracle(bounds(g), bounds(p)))
                .fold(0.0, f64::max)
        })
        .sum();
    total / gold.len() as f64
}

/// Brute-force precision and recall at threshold `t`.
pub fn pr_oracle(gold: &[Segment<f64>], pred: &[Segment<f64>], t: f64) -> (f64, f64) {
    let bounds = |s: &Segment<f64>| (s.start.get(), s.end.get());
    let hit = |x: &Segment<f64>, ys: &[Segment<f64>]| ys.iter().any(|y| iou_oracle(bounds(x), bounds(y)) >= t);
    let p = if pred.is_empty() {
        0.0
    } else {
        pred.iter().filter(|p| hit(p, gold)).count() as f64 / pred.len() as f64
    };
    let r = gold.iter().filter(|g| hit(g, pred)).count() as f64 / gold.len() as f64;
    (p, r)
}
