//! Mapping between timestamps, token indices and frame indices, plus the
//! multimodal input layouts (plain concatenation and timestamp markers).

use std::ops::Range;
use thiserror::Error;

use crate::scalar::Scalar;
use crate::types::{AsrToken, AsrTranscript, FrameTimeline, IndexSpan, Segment, TimeMs};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlignmentError {
    #[error("EmptyTranscript: transcript has no tokens")]
    EmptyTranscript,
    #[error("SpanOutOfBounds: span [{start}, {end}) not within transcript of {len} tokens")]
    SpanOutOfBounds { start: usize, end: usize, len: usize },
    #[error("ZeroBucket: bucket width must be positive")]
    ZeroBucket,
    #[error("AnchorCollision: anchor {0:?} also occurs as a transcript token")]
    AnchorCollision(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rounding {
    /// Last token whose start is at or before `t`.
    Floor,
    /// Token whose midpoint is closest to `t`; earliest wins ties.
    Nearest,
}

pub fn token_index_of_time<T: Scalar>(
    t: TimeMs<T>,
    transcript: &AsrTranscript<T>,
    rounding: Rounding,
) -> Result<usize, AlignmentError> {
    if transcript.is_empty() {
        return Err(AlignmentError::EmptyTranscript);
    }
    let t = t.get();
    let idx = match rounding {
        Rounding::Floor => {
            // starts are non-decreasing
            let after = transcript.tokens.partition_point(|tok| tok.start.get() <= t);
            after.saturating_sub(1)
        }
        Rounding::Nearest => {
            let mut best = 0;
            let mut best_dist = T::infinity();
            for (i, tok) in transcript.tokens.iter().enumerate() {
                let d = (tok.midpoint() - t).abs();
                if d < best_dist {
                    best = i;
                    best_dist = d;
                }
            }
            best
        }
    };
    Ok(idx)
}

/// Result of projecting timestamp segments onto token indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpanMapping {
    pub spans: Vec<IndexSpan>,
    /// Indices (into the input segment list) of segments that captured no token.
    pub dropped: Vec<usize>,
}

/// A token belongs to a segment iff its midpoint lies in `[start, end)`.
///
/// Segments that capture no token are dropped and listed in
/// [`SpanMapping::dropped`]. Output spans are sorted and disjoint when the
/// input segments are.
pub fn segments_to_index_spans<T: Scalar>(segments: &[Segment<T>], transcript: &AsrTranscript<T>) -> SpanMapping {
    let mut out = SpanMapping::default();
    let mut prev_end = 0usize;
    for (si, seg) in segments.iter().enumerate() {
        let Some(mut span) = segment_to_index_span(seg, transcript) else {
            out.dropped.push(si);
            continue;
        };
        // Only reachable when token midpoints are not monotone.
        span.start = span.start.max(prev_end);
        if span.is_empty() {
            out.dropped.push(si);
            continue;
        }
        prev_end = span.end;
        out.spans.push(span);
    }
    out
}

/// Span from the first to the last token whose midpoint lies in the segment,
/// `None` when no midpoint does.
pub fn segment_to_index_span<T: Scalar>(seg: &Segment<T>, transcript: &AsrTranscript<T>) -> Option<IndexSpan> {
    let mut members = transcript
        .tokens
        .iter()
        .enumerate()
        .filter(|(_, tok)| seg.contains(tok.midpoint()))
        .map(|(i, _)| i);
    let first = members.next()?;
    let last = members.last().unwrap_or(first);
    Some(IndexSpan {
        start: first,
        end: last + 1,
        caption: seg.caption.clone(),
    })
}

/// Span `[a, b)` becomes `[token_a.start, token_{b-1}.end]`, captions carried through.
pub fn index_spans_to_segments<T: Scalar>(
    spans: &[IndexSpan],
    transcript: &AsrTranscript<T>,
) -> Result<Vec<Segment<T>>, AlignmentError> {
    let len = transcript.len();
    spans
        .iter()
        .map(|span| {
            if span.start >= span.end || span.end > len {
                return Err(AlignmentError::SpanOutOfBounds {
                    start: span.start,
                    end: span.end,
                    len,
                });
            }
            Ok(Segment {
                start: transcript.tokens[span.start].start,
                end: transcript.tokens[span.end - 1].end,
                caption: span.caption.clone(),
            })
        })
        .collect()
}

/// Whole-second timestamp marker inserted into the text stream.
#[derive(Debug, Clone, PartialEq)]
pub enum MarkedItem<T> {
    Token(AsrToken<T>),
    Marker { anchor: String, seconds: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkedTranscript<T> {
    pub items: Vec<MarkedItem<T>>,
}

impl<T: Scalar> MarkedTranscript<T> {
    pub fn marker_count(&self) -> usize {
        self.items
            .iter()
            .filter(|it| matches!(it, MarkedItem::Marker { .. }))
            .count()
    }

    /// The source transcript with markers removed.
    pub fn strip_markers(&self) -> AsrTranscript<T> {
        AsrTranscript::new(
            self.items
                .iter()
                .filter_map(|it| match it {
                    MarkedItem::Token(tok) => Some(tok.clone()),
                    MarkedItem::Marker { .. } => None,
                })
                .collect(),
        )
    }

    /// Flat token sequence; each marker renders as its anchor followed by the seconds value.
    pub fn render(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.items.len() + self.marker_count());
        for it in &self.items {
            match it {
                MarkedItem::Token(tok) => out.push(tok.text.clone()),
                MarkedItem::Marker { anchor, seconds } => {
                    out.push(anchor.clone());
                    out.push(seconds.to_string());
                }
            }
        }
        out
    }
}

/// Inserts one marker per frame right after the last token whose start is
/// strictly before the frame time. Frames preceding all speech go to the front.
pub fn insert_timestamp_markers<T: Scalar>(
    transcript: &AsrTranscript<T>,
    frames: &FrameTimeline<T>,
    anchor: &str,
) -> Result<MarkedTranscript<T>, AlignmentError> {
    if transcript.texts().any(|t| t == anchor) {
        return Err(AlignmentError::AnchorCollision(anchor.to_owned()));
    }
    let tokens = &transcript.tokens;
    let mut items = Vec::with_capacity(tokens.len() + frames.count);
    let mut emitted = 0usize;
    for k in 0..frames.count {
        let t = frames.frame_time(k).get();
        // tokens with start < t form a prefix since starts are non-decreasing
        while emitted < tokens.len() && tokens[emitted].start.get() < t {
            items.push(MarkedItem::Token(tokens[emitted].clone()));
            emitted += 1;
        }
        let seconds = (T::of_usize(k) / frames.fps).floor().to_u64().unwrap_or(0);
        items.push(MarkedItem::Marker {
            anchor: anchor.to_owned(),
            seconds,
        });
    }
    items.extend(tokens[emitted..].iter().cloned().map(MarkedItem::Token));
    Ok(MarkedTranscript { items })
}

/// Bucket index `floor(t / bucket_ms)` for a temporal embedding lookup.
pub fn temporal_bucket<T: Scalar>(t: TimeMs<T>, bucket_ms: u64) -> Result<u64, AlignmentError> {
    if bucket_ms == 0 {
        return Err(AlignmentError::ZeroBucket);
    }
    let width = T::from_u64(bucket_ms).ok_or(AlignmentError::ZeroBucket)?;
    Ok((t.get() / width).floor().to_u64().unwrap_or(0))
}

/// Positions of the text and visual streams in a concatenated encoder input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConcatLayout {
    pub text_len: usize,
    pub visual_len: usize,
    pub text_first: bool,
}

impl ConcatLayout {
    pub fn new<T: Scalar>(text_len: usize, frames: &FrameTimeline<T>, text_first: bool) -> Self {
        Self {
            text_len,
            visual_len: frames.count,
            text_first,
        }
    }

    pub fn for_transcript<T: Scalar>(transcript: &AsrTranscript<T>, frames: &FrameTimeline<T>) -> Self {
        Self::new(transcript.len(), frames, true)
    }

    pub fn for_marked<T: Scalar>(marked: &MarkedTranscript<T>, frames: &FrameTimeline<T>) -> Self {
        Self::new(marked.render().len(), frames, true)
    }

    pub fn total_len(&self) -> usize {
        self.text_len + self.visual_len
    }

    pub fn text_positions(&self) -> Range<usize> {
        if self.text_first {
            0..self.text_len
        } else {
            self.visual_len..self.total_len()
        }
    }

    pub fn visual_positions(&self) -> Range<usize> {
        if self.text_first {
            self.text_len..self.total_len()
        } else {
            0..self.visual_len
        }
    }
}
