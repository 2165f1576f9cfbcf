//! Corpus I/O and transforms.
//!
//! Annotation, prediction and WikiHow files are line-delimited JSON, one
//! record per line. Target strings travel as `video_id<TAB>target` lines.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{self, CodecError, TargetString};
use crate::metrics::VideoPrediction;
use crate::scalar::Scalar;
use crate::types::{
    validate_annotation, AsrToken, AsrTranscript, CodecConfig, FrameTimeline, Rule, Segment, Setting, TimeMs,
    VideoAnnotation,
};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line} ({video_id}): {violations}")]
    Invalid {
        line: usize,
        video_id: String,
        violations: String,
    },
    #[error("NoSegments: {0} has no segments")]
    NoSegments(String),
    #[error("WikiHow article {article_id}: {message}")]
    InvalidArticle { article_id: String, message: String },
    #[error(transparent)]
    Codec(#[from] CodecError),
}

impl CorpusError {
    pub fn is_io(&self) -> bool {
        matches!(self, CorpusError::Io { .. })
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_owned(),
        source,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadOptions {
    /// Report overlapping gold segments as a warning instead of an error.
    pub allow_overlap: bool,
}

/// Parses one JSON record per non-blank line, returning each with its 1-based line number.
pub fn read_jsonl<D: DeserializeOwned, R: BufRead>(reader: R) -> Result<Vec<(usize, D)>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| CorpusError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        out.push((line_no, rec));
    }
    Ok(out)
}

pub fn write_jsonl<S: Serialize, W: Write>(mut writer: W, records: &[S]) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut writer, r)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

fn open(path: &Path) -> Result<BufReader<File>, CorpusError> {
    File::open(path).map(BufReader::new).map_err(io_err(path))
}

fn create(path: &Path) -> Result<BufWriter<File>, CorpusError> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

pub fn read_annotations<T: Scalar, R: BufRead>(
    reader: R,
    opts: LoadOptions,
) -> Result<Vec<VideoAnnotation<T>>, CorpusError> {
    read_jsonl::<VideoAnnotation<T>, _>(reader)?
        .into_iter()
        .map(|(line, ann)| {
            let (soft, hard): (Vec<_>, Vec<_>) = validate_annotation(&ann)
                .into_iter()
                .partition(|v| opts.allow_overlap && v.rule == Rule::SegmentsNonOverlapping);
            for v in &soft {
                log::warn!("line {line} ({}): {v}", ann.video_id);
            }
            if !hard.is_empty() {
                let msg: Vec<String> = hard.iter().map(ToString::to_string).collect();
                return Err(CorpusError::Invalid {
                    line,
                    video_id: ann.video_id.clone(),
                    violations: msg.join("; "),
                });
            }
            Ok(ann)
        })
        .collect()
}

/// Loads and validates an annotation file, preserving record order.
pub fn load_annotations<T: Scalar>(path: &Path, opts: LoadOptions) -> Result<Vec<VideoAnnotation<T>>, CorpusError> {
    read_annotations(open(path)?, opts)
}

pub fn save_annotations<T: Scalar>(path: &Path, anns: &[VideoAnnotation<T>]) -> Result<(), CorpusError> {
    write_jsonl(create(path)?, anns).map_err(io_err(path))
}

pub fn load_predictions<T: Scalar>(path: &Path) -> Result<Vec<VideoPrediction<T>>, CorpusError> {
    Ok(read_jsonl(open(path)?)?.into_iter().map(|(_, p)| p).collect())
}

pub fn save_predictions<T: Scalar>(path: &Path, preds: &[VideoPrediction<T>]) -> Result<(), CorpusError> {
    write_jsonl(create(path)?, preds).map_err(io_err(path))
}

/// Reads `video_id<TAB>target` lines; the target may be empty.
pub fn read_targets<R: BufRead>(reader: R) -> Result<Vec<(String, TargetString)>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CorpusError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        if line.is_empty() {
            continue;
        }
        let (id, target) = line.split_once('\t').ok_or_else(|| CorpusError::Parse {
            line: i + 1,
            message: "expected video_id<TAB>target".into(),
        })?;
        out.push((id.to_owned(), TargetString(target.to_owned())));
    }
    Ok(out)
}

pub fn write_targets<W: Write>(mut writer: W, rows: &[(String, TargetString)]) -> io::Result<()> {
    for (id, target) in rows {
        writeln!(writer, "{id}\t{target}")?;
    }
    writer.flush()
}

pub fn load_targets(path: &Path) -> Result<Vec<(String, TargetString)>, CorpusError> {
    read_targets(open(path)?)
}

pub fn save_targets(path: &Path, rows: &[(String, TargetString)]) -> Result<(), CorpusError> {
    write_targets(create(path)?, rows).map_err(io_err(path))
}

/// Concatenates the gold segments into a gap-free timeline.
///
/// Tokens whose midpoint falls outside every segment are removed; the rest
/// are shifted left by the removed time before their segment and clamped to
/// it, so each segment keeps its tokens. The frame count is recomputed from
/// the new duration.
pub fn to_partition_setting<T: Scalar>(ann: &VideoAnnotation<T>) -> Result<VideoAnnotation<T>, CorpusError> {
    if ann.segments.is_empty() {
        return Err(CorpusError::NoSegments(ann.video_id.clone()));
    }
    let mut cursor = T::zero();
    // (original segment, shift, new segment)
    let mut placed: Vec<(&Segment<T>, T, Segment<T>)> = Vec::with_capacity(ann.segments.len());
    for seg in &ann.segments {
        let shift = seg.start.get() - cursor;
        let new_seg = Segment {
            start: TimeMs(cursor),
            end: TimeMs(seg.end.get() - shift),
            caption: seg.caption.clone(),
        };
        cursor = new_seg.end.get();
        placed.push((seg, shift, new_seg));
    }

    let tokens = ann
        .transcript
        .tokens
        .iter()
        .filter_map(|tok| {
            let mid = tok.midpoint();
            let (_, shift, new_seg) = placed.iter().find(|(orig, _, _)| orig.contains(mid))?;
            Some(AsrToken {
                text: tok.text.clone(),
                start: TimeMs((tok.start.get() - *shift).max(new_seg.start.get())),
                end: TimeMs((tok.end.get() - *shift).min(new_seg.end.get())),
            })
        })
        .collect();

    let duration = cursor;
    let fps = ann.frames.fps;
    let count = (duration / T::of(1000.0) * fps).ceil().to_usize().unwrap_or(0);
    Ok(VideoAnnotation {
        video_id: ann.video_id.clone(),
        duration: TimeMs(duration),
        transcript: AsrTranscript::new(tokens),
        frames: FrameTimeline::new(fps, count),
        segments: placed.into_iter().map(|(_, _, s)| s).collect(),
        extra: ann.extra.clone(),
    })
}

/// A WikiHow step: half-open body token range plus its summary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WikiHowStep {
    pub start_token: usize,
    pub end_token: usize,
    pub summary: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WikiHowArticle {
    pub article_id: String,
    pub body_tokens: Vec<String>,
    pub steps: Vec<WikiHowStep>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WikiHowExtract<T> {
    pub annotation: VideoAnnotation<T>,
    pub target: TargetString,
    /// Gap-token reassignments.
    pub warnings: Vec<String>,
}

pub fn load_wikihow(path: &Path) -> Result<Vec<WikiHowArticle>, CorpusError> {
    Ok(read_jsonl(open(path)?)?.into_iter().map(|(_, a)| a).collect())
}

/// Turns an article into a pseudo video (token `k` spoken during `[k, k+1)`
/// seconds, one frame per second) whose segments are the steps, and encodes
/// its target string.
///
/// Steps must tile the body; tokens outside every step are given to the
/// preceding step (or the first step, for a leading run) with a warning.
pub fn extract_wikihow<T: Scalar>(
    article: &WikiHowArticle,
    cfg: &CodecConfig,
) -> Result<WikiHowExtract<T>, CorpusError> {
    let invalid = |message: String| CorpusError::InvalidArticle {
        article_id: article.article_id.clone(),
        message,
    };
    if cfg.setting != Setting::Partition {
        return Err(invalid(
            "WikiHow steps tile the article; use the partition setting".into(),
        ));
    }
    let n = article.body_tokens.len();
    if n == 0 {
        return Err(invalid("empty body".into()));
    }
    if article.steps.is_empty() {
        return Err(invalid("no steps".into()));
    }
    let mut prev_end = 0;
    for (i, s) in article.steps.iter().enumerate() {
        if s.start_token >= s.end_token || s.end_token > n || s.start_token < prev_end {
            return Err(invalid(format!(
                "step {i} [{}, {}) must be non-empty, sorted, disjoint and within {n} tokens",
                s.start_token, s.end_token
            )));
        }
        prev_end = s.end_token;
    }

    let mut warnings = Vec::new();
    let steps = &article.steps;
    let mut bounds: Vec<(usize, usize)> = Vec::with_capacity(steps.len());
    for (i, s) in steps.iter().enumerate() {
        let start = if i == 0 { 0 } else { s.start_token };
        let end = steps.get(i + 1).map_or(n, |next| next.start_token);
        if i == 0 && s.start_token > 0 {
            warnings.push(format!(
                "tokens [0, {}) precede every step; assigned to step 0",
                s.start_token
            ));
        }
        if end > s.end_token {
            warnings.push(format!(
                "tokens [{}, {end}) outside steps; assigned to step {i}",
                s.end_token
            ));
        }
        bounds.push((start, end));
    }
    for w in &warnings {
        log::warn!("{}: {w}", article.article_id);
    }

    let second = T::of(1000.0);
    let tokens = article
        .body_tokens
        .iter()
        .enumerate()
        .map(|(k, text)| AsrToken::new(text.clone(), T::of_usize(k) * second, T::of_usize(k + 1) * second))
        .collect();
    let segments = steps
        .iter()
        .zip(&bounds)
        .map(|(s, &(a, b))| {
            Segment::new(T::of_usize(a) * second, T::of_usize(b) * second).with_caption(s.summary.clone())
        })
        .collect();
    let annotation = VideoAnnotation::new(
        article.article_id.clone(),
        T::of_usize(n) * second,
        AsrTranscript::new(tokens),
        FrameTimeline::new(T::one(), n),
        segments,
    );
    let target = codec::encode(&annotation, cfg)?;
    Ok(WikiHowExtract {
        annotation,
        target,
        warnings,
    })
}
