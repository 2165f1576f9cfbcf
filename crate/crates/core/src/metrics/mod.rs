//! Segmentation and captioning evaluation.
//!
//! Segmentation is scored with mIoU (per ground-truth segment, best IoU
//! against any prediction; averaged per video, then over videos) and with
//! precision/recall/F1 at a set of IoU thresholds, averaged over thresholds.
//! Captions are scored only where a prediction matches a ground-truth segment
//! at the threshold; unmatched ground truth contributes zero.

mod caption;
mod iou;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::{segment_to_index_span, segments_to_index_spans};
use crate::scalar::{mean, Scalar};
use crate::types::{IndexSpan, Segment, VideoAnnotation};

pub use caption::{bleu4, caption_tokens, cider_d, meteor_lite, rouge_l, CiderScores};
pub use iou::{
    interval_iou, match_for_captions, miou, precision_recall_f1, span_iou, threshold_counts, Overlap, Prf,
    ThresholdCounts,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("NoGroundTruth: at least one ground-truth segment is required")]
    NoGroundTruth,
    #[error("NoPairs: CIDEr-D needs at least one caption pair")]
    NoPairs,
    #[error("DuplicatePrediction: video {0:?} predicted more than once")]
    DuplicatePrediction(String),
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IouBasis {
    TokenIndex,
    Timestamp,
}

/// How per-threshold precision and recall are pooled across videos.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Per video, then averaged over videos.
    #[default]
    Macro,
    /// Hit counts summed over the corpus.
    Micro,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaptionMetric {
    Bleu4,
    RougeL,
    CiderD,
    MeteorLite,
}

impl CaptionMetric {
    pub const ALL: [CaptionMetric; 4] = [
        CaptionMetric::Bleu4,
        CaptionMetric::RougeL,
        CaptionMetric::CiderD,
        CaptionMetric::MeteorLite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CaptionMetric::Bleu4 => "bleu4",
            CaptionMetric::RougeL => "rouge_l",
            CaptionMetric::CiderD => "cider_d",
            CaptionMetric::MeteorLite => "meteor_lite",
        }
    }
}

impl fmt::Display for CaptionMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CaptionMetric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown caption metric {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig<T> {
    /// Strictly increasing, each in (0, 1].
    pub thresholds: Vec<T>,
    pub iou_basis: IouBasis,
    pub caption_metrics: Vec<CaptionMetric>,
    pub rouge_beta: T,
    pub cider_sigma: T,
    pub aggregation: Aggregation,
}

impl<T: Scalar> EvalConfig<T> {
    pub fn new(iou_basis: IouBasis) -> Self {
        Self {
            thresholds: [0.3, 0.5, 0.7, 0.9].into_iter().map(T::of).collect(),
            iou_basis,
            caption_metrics: CaptionMetric::ALL.to_vec(),
            rouge_beta: T::of(1.2),
            cider_sigma: T::of(6.0),
            aggregation: Aggregation::Macro,
        }
    }

    pub fn check(&self) -> Result<(), MetricsError> {
        let bad = |m: &str| Err(MetricsError::InvalidConfig(m.to_owned()));
        if self.thresholds.is_empty() {
            return bad("at least one threshold is required");
        }
        if self.thresholds.iter().any(|&t| !(t > T::zero() && t <= T::one())) {
            return bad("thresholds must lie in (0, 1]");
        }
        if self.thresholds.windows(2).any(|w| w[1] <= w[0]) {
            return bad("thresholds must be strictly increasing");
        }
        if self.rouge_beta.is_nan() || self.rouge_beta <= T::zero() {
            return bad("rouge_beta must be positive");
        }
        if self.cider_sigma.is_nan() || self.cider_sigma <= T::zero() {
            return bad("cider_sigma must be positive");
        }
        Ok(())
    }
}

/// Predicted segments for one video; same segment schema as the annotation file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoPrediction<T> {
    pub video_id: String,
    pub segments: Vec<Segment<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdScores<T> {
    pub threshold: T,
    pub precision: T,
    pub recall: T,
    pub f1: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoScore<T> {
    pub video_id: String,
    pub miou: T,
    pub num_gt_segments: usize,
    pub num_pred_segments: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport<T> {
    pub iou_basis: IouBasis,
    pub aggregation: Aggregation,
    pub miou: T,
    pub per_threshold: Vec<ThresholdScores<T>>,
    pub avg_precision: T,
    pub avg_recall: T,
    pub avg_f1: T,
    /// Threshold-averaged caption scores keyed by metric name.
    pub caption_scores: BTreeMap<String, T>,
    pub num_videos: usize,
    pub num_gt_segments: usize,
    pub num_pred_segments: usize,
    pub videos: Vec<VideoScore<T>>,
}

impl<T: Scalar> EvalReport<T> {
    /// Flat `key<TAB>value` lines for humans and shell pipelines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            out.push_str(k);
            out.push('\t');
            out.push_str(&v);
            out.push('\n');
        };
        line("num_videos", self.num_videos.to_string());
        line("num_gt_segments", self.num_gt_segments.to_string());
        line("num_pred_segments", self.num_pred_segments.to_string());
        line("miou", format!("{:.6}", self.miou));
        for t in &self.per_threshold {
            line(&format!("precision@{}", t.threshold), format!("{:.6}", t.precision));
            line(&format!("recall@{}", t.threshold), format!("{:.6}", t.recall));
            line(&format!("f1@{}", t.threshold), format!("{:.6}", t.f1));
        }
        line("avg_precision", format!("{:.6}", self.avg_precision));
        line("avg_recall", format!("{:.6}", self.avg_recall));
        line("avg_f1", format!("{:.6}", self.avg_f1));
        for (k, v) in &self.caption_scores {
            line(k, format!("{v:.6}"));
        }
        out
    }
}

trait Captioned {
    fn caption(&self) -> Option<&str>;
}

impl<T> Captioned for Segment<T> {
    fn caption(&self) -> Option<&str> {
        self.caption.as_deref()
    }
}

impl Captioned for IndexSpan {
    fn caption(&self) -> Option<&str> {
        self.caption.as_deref()
    }
}

/// Per-video intermediate results.
struct VideoEval<T> {
    video_id: String,
    miou: T,
    num_gt: usize,
    num_pred: usize,
    counts: Vec<ThresholdCounts>,
    /// `[threshold][gt]` → (matched prediction caption, gt caption) when both exist.
    caption_pairs: Vec<Vec<Option<(String, String)>>>,
}

fn eval_video<T: Scalar, S: Overlap<T> + Captioned>(
    video_id: &str,
    gt: &[S],
    pred: &[S],
    thresholds: &[T],
) -> Result<VideoEval<T>, MetricsError> {
    let miou = miou(gt, pred)?;
    let counts = thresholds.iter().map(|&t| threshold_counts(gt, pred, t)).collect();
    let caption_pairs = thresholds
        .iter()
        .map(|&t| {
            match_for_captions(gt, pred, t)
                .into_iter()
                .zip(gt)
                .map(|(m, g)| {
                    let j = m?;
                    let reference = g.caption()?;
                    Some((pred[j].caption().unwrap_or("").to_owned(), reference.to_owned()))
                })
                .collect()
        })
        .collect();
    Ok(VideoEval {
        video_id: video_id.to_owned(),
        miou,
        num_gt: gt.len(),
        num_pred: pred.len(),
        counts,
        caption_pairs,
    })
}

/// Scores predictions against gold annotations.
///
/// Gold videos absent from `preds` are scored against an empty prediction
/// list; predictions for unknown videos are ignored. Videos with no usable
/// ground-truth segment are skipped. Both cases are logged.
pub fn evaluate<T: Scalar>(
    gold: &[VideoAnnotation<T>],
    preds: &[VideoPrediction<T>],
    cfg: &EvalConfig<T>,
) -> Result<EvalReport<T>, MetricsError> {
    cfg.check()?;
    let mut by_id: HashMap<&str, &[Segment<T>]> = HashMap::with_capacity(preds.len());
    for p in preds {
        if by_id.insert(p.video_id.as_str(), &p.segments).is_some() {
            return Err(MetricsError::DuplicatePrediction(p.video_id.clone()));
        }
    }
    for p in preds {
        if !gold.iter().any(|g| g.video_id == p.video_id) {
            log::warn!("prediction for unknown video {:?} ignored", p.video_id);
        }
    }

    let mut videos: Vec<VideoEval<T>> = Vec::with_capacity(gold.len());
    for ann in gold {
        let pred: &[Segment<T>] = by_id.get(ann.video_id.as_str()).copied().unwrap_or_else(|| {
            log::warn!("no prediction for video {:?}; scoring as empty", ann.video_id);
            &[]
        });
        let result = match cfg.iou_basis {
            IouBasis::Timestamp => eval_video(&ann.video_id, &ann.segments, pred, &cfg.thresholds),
            IouBasis::TokenIndex => {
                let mapping = segments_to_index_spans(&ann.segments, &ann.transcript);
                if !mapping.dropped.is_empty() {
                    log::warn!(
                        "{}: {} gold segment(s) capture no ASR token and are not scored",
                        ann.video_id,
                        mapping.dropped.len()
                    );
                }
                let pred_spans: Vec<IndexSpan> = pred
                    .iter()
                    .filter_map(|s| segment_to_index_span(s, &ann.transcript))
                    .collect();
                eval_video(&ann.video_id, &mapping.spans, &pred_spans, &cfg.thresholds)
            }
        };
        match result {
            Ok(v) => videos.push(v),
            Err(MetricsError::NoGroundTruth) => {
                log::warn!("{}: no ground-truth segment to score; video skipped", ann.video_id);
            }
            Err(e) => return Err(e),
        }
    }

    let n_thr = cfg.thresholds.len();
    let mut per_threshold = Vec::with_capacity(n_thr);
    for (ti, &threshold) in cfg.thresholds.iter().enumerate() {
        let (precision, recall) = match cfg.aggregation {
            Aggregation::Macro => {
                let p: Vec<T> = videos.iter().map(|v| v.counts[ti].precision()).collect();
                let r: Vec<T> = videos.iter().map(|v| v.counts[ti].recall()).collect();
                (mean(&p), mean(&r))
            }
            Aggregation::Micro => {
                let pooled = videos.iter().fold(ThresholdCounts::default(), |acc, v| {
                    let c = v.counts[ti];
                    ThresholdCounts {
                        matched_pred: acc.matched_pred + c.matched_pred,
                        num_pred: acc.num_pred + c.num_pred,
                        matched_gt: acc.matched_gt + c.matched_gt,
                        num_gt: acc.num_gt + c.num_gt,
                    }
                });
                (pooled.precision(), pooled.recall())
            }
        };
        let prf = Prf::from_pr(precision, recall);
        per_threshold.push(ThresholdScores {
            threshold,
            precision: prf.precision,
            recall: prf.recall,
            f1: prf.f1,
        });
    }

    let mut caption_scores = BTreeMap::new();
    for &metric in &cfg.caption_metrics {
        let per_thr: Vec<T> = (0..n_thr)
            .map(|ti| caption_score_at(&videos, ti, metric, cfg))
            .collect::<Result<_, _>>()?;
        caption_scores.insert(metric.name().to_owned(), mean(&per_thr));
    }

    let col = |f: fn(&ThresholdScores<T>) -> T| mean(&per_threshold.iter().map(f).collect::<Vec<_>>());
    Ok(EvalReport {
        iou_basis: cfg.iou_basis,
        aggregation: cfg.aggregation,
        miou: mean(&videos.iter().map(|v| v.miou).collect::<Vec<_>>()),
        avg_precision: col(|s| s.precision),
        avg_recall: col(|s| s.recall),
        avg_f1: col(|s| s.f1),
        per_threshold,
        caption_scores,
        num_videos: videos.len(),
        num_gt_segments: videos.iter().map(|v| v.num_gt).sum(),
        num_pred_segments: videos.iter().map(|v| v.num_pred).sum(),
        videos: videos
            .iter()
            .map(|v| VideoScore {
                video_id: v.video_id.clone(),
                miou: v.miou,
                num_gt_segments: v.num_gt,
                num_pred_segments: v.num_pred,
            })
            .collect(),
    })
}

/// Mean over videos of the per-video mean over gt segments, at one threshold.
fn caption_score_at<T: Scalar>(
    videos: &[VideoEval<T>],
    ti: usize,
    metric: CaptionMetric,
    cfg: &EvalConfig<T>,
) -> Result<T, MetricsError> {
    let mut per_gt: Vec<Vec<T>> = videos
        .iter()
        .map(|v| vec![T::zero(); v.caption_pairs[ti].len()])
        .collect();

    if metric == CaptionMetric::CiderD {
        // IDF is shared by every matched pair at this threshold.
        let mut slots = Vec::new();
        let mut pairs = Vec::new();
        for (vi, v) in videos.iter().enumerate() {
            for (gi, pair) in v.caption_pairs[ti].iter().enumerate() {
                if let Some((h, r)) = pair {
                    slots.push((vi, gi));
                    pairs.push((h.as_str(), r.as_str()));
                }
            }
        }
        if !pairs.is_empty() {
            let scores = cider_d(&pairs, cfg.cider_sigma)?;
            for ((vi, gi), s) in slots.into_iter().zip(scores.per_pair) {
                per_gt[vi][gi] = s;
            }
        }
    } else {
        for (vi, v) in videos.iter().enumerate() {
            for (gi, pair) in v.caption_pairs[ti].iter().enumerate() {
                if let Some((h, r)) = pair {
                    per_gt[vi][gi] = match metric {
                        CaptionMetric::Bleu4 => bleu4(h, r),
                        CaptionMetric::RougeL => rouge_l(h, r, cfg.rouge_beta),
                        CaptionMetric::MeteorLite => meteor_lite(h, r),
                        CaptionMetric::CiderD => unreachable!(),
                    };
                }
            }
        }
    }
    Ok(mean(&per_gt.iter().map(|g| mean(g)).collect::<Vec<_>>()))
}
