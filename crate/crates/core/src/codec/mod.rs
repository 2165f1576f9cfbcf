//! Target-string codecs.
//!
//! Gold segmentations (and optionally captions) are serialized into a single
//! whitespace-separated target string that a sequence model can learn to emit,
//! and arbitrary model output is parsed back into index spans. Two grammars
//! exist:
//!
//! * **tagging**: one tag per ASR token. `<sep>` opens a segment, `<pad>`
//!   continues it, and in the original setting `<end>` closes it. In seg+cap
//!   mode the caption words follow `<sep>` and are truncated to fit.
//! * **length**: per segment, its token length (preceded by the gap from the
//!   previous segment in the original setting), optionally followed by the
//!   caption; seg+cap records are separated by `<sep>`.
//!
//! Decoding never fails on content. Every recovery step is recorded as a
//! [`DecodeWarning`], and [`grammar_check`] reports exactly the warnings that
//! do not depend on the transcript length.

mod length;
mod tagging;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::segments_to_index_spans;
use crate::scalar::Scalar;
use crate::types::{
    validate_annotation, AsrTranscript, CodecConfig, Formulation, IndexSpan, Mode, Setting, VideoAnnotation,
};

/// Serialized model target: tokens joined by single spaces, no trailing space.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TargetString(pub String);

impl TargetString {
    pub fn from_tokens<S: AsRef<str>>(tokens: &[S]) -> Self {
        let mut s = String::new();
        for (i, t) in tokens.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            s.push_str(t.as_ref());
        }
        Self(s)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn tokens(&self) -> Vec<&str> {
        self.0.split_whitespace().collect()
    }
}

impl fmt::Display for TargetString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for TargetString {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

/// Integer pair (or single integer) of one length-formulation record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LengthRecord {
    /// Tokens between the previous segment's end and this segment's start;
    /// `None` in the partition setting.
    pub gap: Option<usize>,
    pub length: usize,
    pub caption: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WarningKind {
    /// A non-integer token where an integer was required; skipped.
    ExpectedInteger,
    /// Integer with a sign or leading zeros; value used.
    NonCanonicalInteger,
    /// Segment length of zero or less; record dropped.
    NonPositiveLength,
    /// Negative gap; clamped to zero.
    NegativeGap,
    /// A gap with no following length; dropped.
    DanglingInteger,
    /// A seg+cap record with no (complete) integer prefix; dropped.
    MissingLength,
    /// Separator with nothing between it and the previous one.
    EmptyRecord,
    /// Segment runs past the transcript; clamped, later records discarded.
    LengthOverflow,
    /// Partition lengths stop short of the transcript end; last span extended.
    UnderCoverage,
    /// Token that is not legal at this point of the grammar; ignored.
    UnexpectedToken,
    /// Partition tagging target whose first tag is not the separator.
    MissingInitialSep,
    /// Caption word after padding inside a tagged segment.
    WordAfterPad,
    /// End tag with no open segment.
    StrayEnd,
    /// Tagging target length differs from the transcript length.
    LengthMismatch,
    /// Nothing to parse where at least one segment is required.
    EmptyTarget,
}

impl fmt::Display for WarningKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// One recovery action taken while decoding, or one grammar violation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeWarning {
    pub kind: WarningKind,
    /// Token position in the target string.
    pub position: usize,
    pub detail: String,
}

impl DecodeWarning {
    pub(crate) fn new(kind: WarningKind, position: usize, detail: impl Into<String>) -> Self {
        Self {
            kind,
            position,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for DecodeWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at position {}", self.kind, self.position)?;
        if !self.detail.is_empty() {
            write!(f, ": {}", self.detail)?;
        }
        Ok(())
    }
}

/// Spans recovered from a target string plus the recovery log.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DecodeReport {
    pub spans: Vec<IndexSpan>,
    pub warnings: Vec<DecodeWarning>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),
    #[error("InvalidAnnotation: {0}")]
    InvalidAnnotation(String),
    #[error("MissingCaption: segment {0} has no caption")]
    MissingCaption(usize),
    #[error("ReservedToken: caption of segment {segment} contains special token {token:?}")]
    ReservedToken { segment: usize, token: String },
    #[error("NotAPartition: spans do not tile [0, {0})")]
    NotAPartition(usize),
    #[error("InvalidSpans: spans must be non-empty, sorted, disjoint and within [0, {0})")]
    InvalidSpans(usize),
    #[error("EmptyTranscript: cannot decode against an empty transcript")]
    EmptyTranscript,
}

/// Serializes an annotation's gold segments under `cfg`.
///
/// Segments that capture no ASR token are dropped (logged) before encoding.
pub fn encode<T: Scalar>(ann: &VideoAnnotation<T>, cfg: &CodecConfig) -> Result<TargetString, CodecError> {
    let violations = validate_annotation(ann);
    if !violations.is_empty() {
        let msg: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return Err(CodecError::InvalidAnnotation(msg.join("; ")));
    }
    let mapping = segments_to_index_spans(&ann.segments, &ann.transcript);
    if !mapping.dropped.is_empty() {
        log::warn!(
            "{}: {} segment(s) capture no ASR token and are not encoded: {:?}",
            ann.video_id,
            mapping.dropped.len(),
            mapping.dropped
        );
    }
    encode_spans(&mapping.spans, ann.transcript.len(), cfg)
}

/// Serializes index spans over a transcript of `transcript_len` tokens.
pub fn encode_spans(spans: &[IndexSpan], transcript_len: usize, cfg: &CodecConfig) -> Result<TargetString, CodecError> {
    cfg.check().map_err(CodecError::InvalidConfig)?;
    check_spans(spans, transcript_len)?;
    if cfg.setting == Setting::Partition && !tiles(spans, transcript_len) {
        return Err(CodecError::NotAPartition(transcript_len));
    }
    let captions = caption_words(spans, cfg)?;
    let tokens = match cfg.formulation {
        Formulation::Tagging => tagging::encode(spans, &captions, transcript_len, cfg),
        Formulation::Length => length::encode(spans, &captions, cfg),
    };
    Ok(TargetString::from_tokens(&tokens))
}

/// Parses (possibly malformed) model output back into index spans.
///
/// Fails only when `cfg` is inconsistent or the transcript is empty.
pub fn decode<T: Scalar>(
    target: &TargetString,
    transcript: &AsrTranscript<T>,
    cfg: &CodecConfig,
) -> Result<DecodeReport, CodecError> {
    decode_with_len(target, transcript.len(), cfg)
}

/// [`decode`] against a transcript known only by its token count.
pub fn decode_with_len(
    target: &TargetString,
    transcript_len: usize,
    cfg: &CodecConfig,
) -> Result<DecodeReport, CodecError> {
    cfg.check().map_err(CodecError::InvalidConfig)?;
    if transcript_len == 0 {
        return Err(CodecError::EmptyTranscript);
    }
    let tokens = target.tokens();
    let report = match cfg.formulation {
        Formulation::Tagging => tagging::decode(&tokens, transcript_len, cfg),
        Formulation::Length => {
            let (records, mut warnings) = length::parse(&tokens, cfg);
            let spans = length::layout(&records, transcript_len, cfg.setting, tokens.len(), &mut warnings);
            DecodeReport { spans, warnings }
        }
    };
    debug_assert!(check_spans(&report.spans, transcript_len).is_ok());
    Ok(report)
}

/// Syntax violations of `target` under `cfg`, sorted by position.
///
/// Empty iff the target decodes without any recovery warning against some
/// transcript length.
pub fn grammar_check(target: &TargetString, cfg: &CodecConfig) -> Vec<DecodeWarning> {
    if let Err(msg) = cfg.check() {
        return vec![DecodeWarning::new(WarningKind::UnexpectedToken, 0, msg)];
    }
    let tokens = target.tokens();
    let mut out = match cfg.formulation {
        Formulation::Tagging => {
            if tokens.is_empty() {
                vec![DecodeWarning::new(
                    WarningKind::EmptyTarget,
                    0,
                    "tagging targets have one tag per transcript token",
                )]
            } else {
                tagging::decode(&tokens, tokens.len(), cfg).warnings
            }
        }
        Formulation::Length => {
            let (records, mut warnings) = length::parse(&tokens, cfg);
            if cfg.setting == Setting::Partition && records.is_empty() && warnings.is_empty() {
                warnings.push(DecodeWarning::new(
                    WarningKind::EmptyTarget,
                    0,
                    "a partition needs at least one segment",
                ));
            }
            warnings
        }
    };
    out.sort_by_key(|w| w.position);
    out
}

fn check_spans(spans: &[IndexSpan], len: usize) -> Result<(), CodecError> {
    let mut prev_end = 0;
    for s in spans {
        if s.start >= s.end || s.start < prev_end || s.end > len {
            return Err(CodecError::InvalidSpans(len));
        }
        prev_end = s.end;
    }
    Ok(())
}

fn tiles(spans: &[IndexSpan], len: usize) -> bool {
    let mut cursor = 0;
    for s in spans {
        if s.start != cursor {
            return false;
        }
        cursor = s.end;
    }
    cursor == len && !spans.is_empty()
}

/// Whitespace-split caption words per span; empty lists in seg-only mode.
fn caption_words<'a>(spans: &'a [IndexSpan], cfg: &CodecConfig) -> Result<Vec<Vec<&'a str>>, CodecError> {
    spans
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if cfg.mode == Mode::SegOnly {
                return Ok(Vec::new());
            }
            let caption = s.caption.as_deref().ok_or(CodecError::MissingCaption(i))?;
            let words: Vec<&str> = caption.split_whitespace().collect();
            if let Some(w) = words.iter().find(|w| cfg.is_special(w)) {
                return Err(CodecError::ReservedToken {
                    segment: i,
                    token: (*w).to_owned(),
                });
            }
            Ok(words)
        })
        .collect()
}

/// Canonical decimal integer: digits only, no leading zeros.
fn parse_integer(token: &str) -> Option<(i64, bool)> {
    let (neg, digits) = match token.as_bytes().first()? {
        b'+' => (false, &token[1..]),
        b'-' => (true, &token[1..]),
        _ => (false, token),
    };
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let magnitude = digits.bytes().fold(0i64, |acc, b| {
        acc.saturating_mul(10).saturating_add(i64::from(b - b'0'))
    });
    let canonical = digits.len() == token.len() && (digits == "0" || !digits.starts_with('0'));
    Some((if neg { -magnitude } else { magnitude }, canonical))
}
