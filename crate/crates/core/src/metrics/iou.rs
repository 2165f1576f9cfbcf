//! Interval IoU and the segmentation scores built on it.

use crate::scalar::{mean, Scalar};
use crate::types::{IndexSpan, Segment};

use super::MetricsError;

/// Intersection-over-union between two items of the same basis.
pub trait Overlap<T> {
    fn iou(&self, other: &Self) -> T;
}

impl<T: Scalar> Overlap<T> for Segment<T> {
    fn iou(&self, other: &Self) -> T {
        interval_iou(self, other)
    }
}

impl<T: Scalar> Overlap<T> for IndexSpan {
    fn iou(&self, other: &Self) -> T {
        span_iou(self, other)
    }
}

/// Timestamp IoU: `|a ∩ b| / (|a| + |b| - |a ∩ b|)`.
pub fn interval_iou<T: Scalar>(a: &Segment<T>, b: &Segment<T>) -> T {
    let lo = a.start.get().max(b.start.get());
    let hi = a.end.get().min(b.end.get());
    let inter = (hi - lo).max(T::zero());
    let union = a.duration() + b.duration() - inter;
    if union <= T::zero() {
        return T::zero();
    }
    (inter / union).min(T::one())
}

/// Token-index IoU over half-open ranges, counted in tokens.
pub fn span_iou<T: Scalar>(a: &IndexSpan, b: &IndexSpan) -> T {
    let lo = a.start.max(b.start);
    let hi = a.end.min(b.end);
    let inter = hi.saturating_sub(lo);
    let union = a.len() + b.len() - inter;
    if union == 0 {
        return T::zero();
    }
    T::of_usize(inter) / T::of_usize(union)
}

fn best_iou<T: Scalar, S: Overlap<T>>(item: &S, others: &[S]) -> T {
    others
        .iter()
        .map(|o| item.iou(o))
        .fold(T::zero(), |acc, v| if v > acc { v } else { acc })
}

/// Mean over ground-truth items of their best IoU against any prediction.
pub fn miou<T: Scalar, S: Overlap<T>>(gt: &[S], pred: &[S]) -> Result<T, MetricsError> {
    if gt.is_empty() {
        return Err(MetricsError::NoGroundTruth);
    }
    let best: Vec<T> = gt.iter().map(|g| best_iou(g, pred)).collect();
    Ok(mean(&best))
}

/// Precision, recall and their geometric mean at one IoU threshold.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Prf<T> {
    pub precision: T,
    pub recall: T,
    pub f1: T,
}

impl<T: Scalar> Prf<T> {
    pub fn from_pr(precision: T, recall: T) -> Self {
        Self {
            precision,
            recall,
            f1: (precision * recall).sqrt(),
        }
    }
}

/// Hit counts at one threshold, kept separate so they can be pooled across videos.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ThresholdCounts {
    /// Predictions with IoU ≥ t against at least one ground-truth item.
    pub matched_pred: usize,
    pub num_pred: usize,
    /// Ground-truth items with IoU ≥ t against at least one prediction.
    pub matched_gt: usize,
    pub num_gt: usize,
}

impl ThresholdCounts {
    pub fn precision<T: Scalar>(&self) -> T {
        ratio(self.matched_pred, self.num_pred)
    }

    pub fn recall<T: Scalar>(&self) -> T {
        ratio(self.matched_gt, self.num_gt)
    }
}

fn ratio<T: Scalar>(num: usize, den: usize) -> T {
    if den == 0 {
        T::zero()
    } else {
        T::of_usize(num) / T::of_usize(den)
    }
}

pub fn threshold_counts<T: Scalar, S: Overlap<T>>(gt: &[S], pred: &[S], t: T) -> ThresholdCounts {
    let hit = |item: &S, others: &[S]| others.iter().any(|o| item.iou(o) >= t);
    ThresholdCounts {
        matched_pred: pred.iter().filter(|p| hit(p, gt)).count(),
        num_pred: pred.len(),
        matched_gt: gt.iter().filter(|g| hit(g, pred)).count(),
        num_gt: gt.len(),
    }
}

pub fn precision_recall_f1<T: Scalar, S: Overlap<T>>(gt: &[S], pred: &[S], t: T) -> Result<Prf<T>, MetricsError> {
    if gt.is_empty() {
        return Err(MetricsError::NoGroundTruth);
    }
    let counts = threshold_counts(gt, pred, t);
    Ok(Prf::from_pr(counts.precision(), counts.recall()))
}

/// For each ground-truth item, the prediction with the highest IoU if that IoU
/// reaches `t`; ties go to the earlier prediction.
pub fn match_for_captions<T: Scalar, S: Overlap<T>>(gt: &[S], pred: &[S], t: T) -> Vec<Option<usize>> {
    gt.iter()
        .map(|g| {
            let mut best: Option<(usize, T)> = None;
            for (j, p) in pred.iter().enumerate() {
                let v = g.iou(p);
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((j, v));
                }
            }
            best.filter(|&(_, v)| v >= t).map(|(j, _)| j)
        })
        .collect()
}
