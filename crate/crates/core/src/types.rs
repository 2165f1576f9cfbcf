//! Domain types shared by every module, plus annotation validation.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// A non-negative, finite timestamp in milliseconds.
///
/// Construction through [`From`] is unchecked so that files with bad values still
/// deserialize; [`validate_annotation`] reports them.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TimeMs<T>(pub T);

impl<T: Scalar> TimeMs<T> {
    pub fn new(ms: T) -> Option<Self> {
        (ms.is_finite() && ms >= T::zero()).then_some(Self(ms))
    }

    pub fn from_secs(secs: T) -> Self {
        Self(secs * T::of(1000.0))
    }

    #[inline]
    pub fn get(self) -> T {
        self.0
    }

    pub fn is_valid(self) -> bool {
        self.0.is_finite() && self.0 >= T::zero()
    }
}

impl<T: Scalar> From<T> for TimeMs<T> {
    fn from(ms: T) -> Self {
        Self(ms)
    }
}

/// One timestamped ASR token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsrToken<T> {
    pub text: String,
    #[serde(rename = "start_ms")]
    pub start: TimeMs<T>,
    #[serde(rename = "end_ms")]
    pub end: TimeMs<T>,
}

impl<T: Scalar> AsrToken<T> {
    pub fn new(text: impl Into<String>, start: T, end: T) -> Self {
        Self {
            text: text.into(),
            start: TimeMs(start),
            end: TimeMs(end),
        }
    }

    /// Temporal midpoint, used to decide segment membership.
    pub fn midpoint(&self) -> T {
        (self.start.get() + self.end.get()) / T::of(2.0)
    }
}

/// Ordered ASR tokens; the coordinate system for all index spans.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AsrTranscript<T> {
    pub tokens: Vec<AsrToken<T>>,
}

impl<T: Scalar> AsrTranscript<T> {
    pub fn new(tokens: Vec<AsrToken<T>>) -> Self {
        Self { tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.text.as_str())
    }
}

/// An event as a timestamp interval, optionally captioned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment<T> {
    #[serde(rename = "start_ms")]
    pub start: TimeMs<T>,
    #[serde(rename = "end_ms")]
    pub end: TimeMs<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caption: Option<String>,
}

impl<T: Scalar> Segment<T> {
    pub fn new(start: T, end: T) -> Self {
        Self {
            start: TimeMs(start),
            end: TimeMs(end),
            caption: None,
        }
    }

    pub fn with_caption(mut self, caption: impl Into<String>) -> Self {
        self.caption = Some(caption.into());
        self
    }

    pub fn duration(&self) -> T {
        self.end.get() - self.start.get()
    }

    /// Whether `t` falls in the half-open interval `[start, end)`.
    pub fn contains(&self, t: T) -> bool {
        self.start.get() <= t && t < self.end.get()
    }
}

/// Half-open token-index interval `[start, end)`, optionally captioned.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IndexSpan {
    pub start: usize,
    pub end: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caption: Option<String>,
}

impl IndexSpan {
    pub fn new(start: usize, end: usize) -> Self {
        Self {
            start,
            end,
            caption: None,
        }
    }

    pub fn with_caption(mut self, caption: impl Into<String>) -> Self {
        self.caption = Some(caption.into());
        self
    }

    /// Number of tokens covered.
    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    /// Same interval, caption dropped.
    pub fn bounds(&self) -> (usize, usize) {
        (self.start, self.end)
    }
}

/// Fixed-rate visual frame timeline: frame `k` sits at `k / fps` seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameTimeline<T> {
    pub fps: T,
    pub count: usize,
}

impl<T: Scalar> FrameTimeline<T> {
    pub fn new(fps: T, count: usize) -> Self {
        Self { fps, count }
    }

    /// Timestamp of frame `k` in milliseconds.
    pub fn frame_time(&self, k: usize) -> TimeMs<T> {
        TimeMs::from_secs(T::of_usize(k) / self.fps)
    }
}

/// One video's transcript, frame timeline and gold segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoAnnotation<T> {
    pub video_id: String,
    #[serde(rename = "duration_ms")]
    pub duration: TimeMs<T>,
    #[serde(rename = "asr")]
    pub transcript: AsrTranscript<T>,
    pub frames: FrameTimeline<T>,
    pub segments: Vec<Segment<T>>,
    /// Fields not covered by the schema, carried through load/save untouched.
    #[serde(flatten)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

impl<T: Scalar> VideoAnnotation<T> {
    pub fn new(
        video_id: impl Into<String>,
        duration_ms: T,
        transcript: AsrTranscript<T>,
        frames: FrameTimeline<T>,
        segments: Vec<Segment<T>>,
    ) -> Self {
        Self {
            video_id: video_id.into(),
            duration: TimeMs(duration_ms),
            transcript,
            frames,
            segments,
            extra: serde_json::Map::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    Tagging,
    Length,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    /// Segments tile the (gap-free) transcript.
    Partition,
    /// Segments may be separated by gaps.
    Original,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    SegOnly,
    SegCap,
}

/// Target-string grammar selection plus its special tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodecConfig {
    pub formulation: Formulation,
    pub setting: Setting,
    pub mode: Mode,
    #[serde(default = "default_sep")]
    pub sep_token: String,
    #[serde(default = "default_pad")]
    pub pad_token: String,
    #[serde(default = "default_end")]
    pub end_token: String,
}

fn default_sep() -> String {
    "<sep>".to_owned()
}

fn default_pad() -> String {
    "<pad>".to_owned()
}

fn default_end() -> String {
    "<end>".to_owned()
}

impl CodecConfig {
    pub fn new(formulation: Formulation, setting: Setting, mode: Mode) -> Self {
        Self {
            formulation,
            setting,
            mode,
            sep_token: default_sep(),
            pad_token: default_pad(),
            end_token: default_end(),
        }
    }

    /// All eight formulation × setting × mode combinations with default tokens.
    pub fn all() -> Vec<Self> {
        let mut out = Vec::with_capacity(8);
        for formulation in [Formulation::Tagging, Formulation::Length] {
            for setting in [Setting::Partition, Setting::Original] {
                for mode in [Mode::SegOnly, Mode::SegCap] {
                    out.push(Self::new(formulation, setting, mode));
                }
            }
        }
        out
    }

    pub fn is_special(&self, token: &str) -> bool {
        token == self.sep_token || token == self.pad_token || token == self.end_token
    }

    /// Checks that the special tokens are non-empty, whitespace-free and pairwise distinct.
    pub fn check(&self) -> Result<(), String> {
        let named = [
            ("sep_token", &self.sep_token),
            ("pad_token", &self.pad_token),
            ("end_token", &self.end_token),
        ];
        for (name, tok) in named {
            if tok.is_empty() || tok.chars().any(char::is_whitespace) {
                return Err(format!("{name} must be a non-empty whitespace-free token"));
            }
        }
        if self.sep_token == self.pad_token || self.sep_token == self.end_token || self.pad_token == self.end_token {
            return Err("sep_token, pad_token and end_token must be pairwise distinct".into());
        }
        Ok(())
    }
}

impl fmt::Display for CodecConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}/{:?}/{:?}", self.formulation, self.setting, self.mode)
    }
}

/// The annotation rule a [`Violation`] breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    TimeNonNegativeFinite,
    TokenTextNonEmpty,
    TokenTextNoWhitespace,
    TokenStartNotAfterEnd,
    TokenStartsNonDecreasing,
    FpsPositive,
    SegmentStartBeforeEnd,
    SegmentWithinDuration,
    SegmentsSorted,
    SegmentsNonOverlapping,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::TimeNonNegativeFinite => "TimeMs >= 0 and finite",
            Rule::TokenTextNonEmpty => "AsrToken.text non-empty",
            Rule::TokenTextNoWhitespace => "AsrToken.text has no whitespace",
            Rule::TokenStartNotAfterEnd => "AsrToken.start <= AsrToken.end",
            Rule::TokenStartsNonDecreasing => "token start times non-decreasing",
            Rule::FpsPositive => "FrameTimeline.fps > 0",
            Rule::SegmentStartBeforeEnd => "Segment.start < Segment.end",
            Rule::SegmentWithinDuration => "segment within [0, duration]",
            Rule::SegmentsSorted => "segments sorted by start",
            Rule::SegmentsNonOverlapping => "segments pairwise non-overlapping",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One broken invariant, naming the offending field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub rule: Rule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

/// Lists every invariant the annotation breaks; empty means valid.
pub fn validate_annotation<T: Scalar>(ann: &VideoAnnotation<T>) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |field: String, rule: Rule| out.push(Violation { field, rule });

    if !ann.duration.is_valid() {
        push("duration_ms".into(), Rule::TimeNonNegativeFinite);
    }

    let mut prev_start: Option<T> = None;
    for (i, tok) in ann.transcript.tokens.iter().enumerate() {
        if tok.text.is_empty() {
            push(format!("asr[{i}].text"), Rule::TokenTextNonEmpty);
        } else if tok.text.chars().any(char::is_whitespace) {
            push(format!("asr[{i}].text"), Rule::TokenTextNoWhitespace);
        }
        if !tok.start.is_valid() {
            push(format!("asr[{i}].start_ms"), Rule::TimeNonNegativeFinite);
        }
        if !tok.end.is_valid() {
            push(format!("asr[{i}].end_ms"), Rule::TimeNonNegativeFinite);
        }
        if tok.start.get() > tok.end.get() {
            push(format!("asr[{i}]"), Rule::TokenStartNotAfterEnd);
        }
        if let Some(p) = prev_start {
            if tok.start.get() < p {
                push(format!("asr[{i}].start_ms"), Rule::TokenStartsNonDecreasing);
            }
        }
        prev_start = Some(tok.start.get());
    }

    if !(ann.frames.fps.is_finite() && ann.frames.fps > T::zero()) {
        push("frames.fps".into(), Rule::FpsPositive);
    }

    let duration = ann.duration.get();
    for (i, seg) in ann.segments.iter().enumerate() {
        if !seg.start.is_valid() {
            push(format!("segments[{i}].start_ms"), Rule::TimeNonNegativeFinite);
        }
        if !seg.end.is_valid() {
            push(format!("segments[{i}].end_ms"), Rule::TimeNonNegativeFinite);
        }
        if seg.start.get().partial_cmp(&seg.end.get()) != Some(std::cmp::Ordering::Less) {
            push(format!("segments[{i}]"), Rule::SegmentStartBeforeEnd);
        }
        if seg.end.get() > duration {
            push(format!("segments[{i}]"), Rule::SegmentWithinDuration);
        }
    }
    for (i, pair) in ann.segments.windows(2).enumerate() {
        let (a, b) = (&pair[0], &pair[1]);
        if b.start.get() < a.start.get() {
            push(format!("segments[{}]", i + 1), Rule::SegmentsSorted);
        } else if b.start.get() < a.end.get() {
            push(format!("segments[{}]", i + 1), Rule::SegmentsNonOverlapping);
        }
    }
    out
}
