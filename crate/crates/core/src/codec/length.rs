use super::{parse_integer, DecodeWarning, LengthRecord, WarningKind};
use crate::types::{CodecConfig, IndexSpan, Mode, Setting};

pub(super) fn encode(spans: &[IndexSpan], captions: &[Vec<&str>], cfg: &CodecConfig) -> Vec<String> {
    let mut out = Vec::new();
    let mut prev_end = 0;
    for (i, (span, words)) in spans.iter().zip(captions).enumerate() {
        if cfg.mode == Mode::SegCap && i > 0 {
            out.push(cfg.sep_token.clone());
        }
        if cfg.setting == Setting::Original {
            out.push((span.start - prev_end).to_string());
        }
        out.push(span.len().to_string());
        out.extend(words.iter().map(|w| (*w).to_owned()));
        prev_end = span.end;
    }
    out
}

pub(super) struct Parsed {
    record: LengthRecord,
    position: usize,
}

fn ints_per_record(setting: Setting) -> usize {
    match setting {
        Setting::Partition => 1,
        Setting::Original => 2,
    }
}

/// Transcript-independent parse: every warning produced here is a syntax violation.
pub(super) fn parse(tokens: &[&str], cfg: &CodecConfig) -> (Vec<Parsed>, Vec<DecodeWarning>) {
    let mut warnings = Vec::new();
    let mut records = Vec::new();
    let k = ints_per_record(cfg.setting);
    match cfg.mode {
        Mode::SegOnly => {
            let mut pending: Vec<(i64, usize)> = Vec::with_capacity(k);
            for (i, tok) in tokens.iter().enumerate() {
                if let Some(v) = read_integer(tok, i, &mut warnings) {
                    pending.push((v, i));
                    if pending.len() == k {
                        records.extend(make_record(&pending, None, &mut warnings));
                        pending.clear();
                    }
                }
            }
            if let Some(&(v, pos)) = pending.first() {
                warnings.push(DecodeWarning::new(
                    WarningKind::DanglingInteger,
                    pos,
                    format!("gap {v} has no length"),
                ));
            }
        }
        Mode::SegCap => {
            if tokens.is_empty() {
                return (records, warnings);
            }
            let mut group_start = 0;
            for i in 0..=tokens.len() {
                if i < tokens.len() && tokens[i] != cfg.sep_token {
                    continue;
                }
                if group_start == i {
                    warnings.push(DecodeWarning::new(
                        WarningKind::EmptyRecord,
                        i.min(tokens.len().saturating_sub(1)),
                        "separator with no record before it",
                    ));
                } else {
                    records.extend(parse_captioned(
                        &tokens[group_start..i],
                        group_start,
                        k,
                        cfg,
                        &mut warnings,
                    ));
                }
                group_start = i + 1;
            }
        }
    }
    (records, warnings)
}

fn read_integer(tok: &str, pos: usize, warnings: &mut Vec<DecodeWarning>) -> Option<i64> {
    match parse_integer(tok) {
        Some((v, canonical)) => {
            if !canonical {
                warnings.push(DecodeWarning::new(
                    WarningKind::NonCanonicalInteger,
                    pos,
                    format!("{tok:?} read as {v}"),
                ));
            }
            Some(v)
        }
        None => {
            warnings.push(DecodeWarning::new(
                WarningKind::ExpectedInteger,
                pos,
                format!("{tok:?} skipped"),
            ));
            None
        }
    }
}

fn parse_captioned(
    group: &[&str],
    offset: usize,
    k: usize,
    cfg: &CodecConfig,
    warnings: &mut Vec<DecodeWarning>,
) -> Option<Parsed> {
    let mut ints: Vec<(i64, usize)> = Vec::with_capacity(k);
    let mut words: Vec<&str> = Vec::new();
    for (j, &tok) in group.iter().enumerate() {
        let pos = offset + j;
        if ints.len() < k {
            if let Some(v) = read_integer(tok, pos, warnings) {
                ints.push((v, pos));
            }
        } else if cfg.is_special(tok) {
            warnings.push(DecodeWarning::new(
                WarningKind::UnexpectedToken,
                pos,
                format!("{tok:?} inside a caption"),
            ));
        } else {
            words.push(tok);
        }
    }
    if ints.len() < k {
        warnings.push(DecodeWarning::new(WarningKind::MissingLength, offset, "record dropped"));
        return None;
    }
    make_record(&ints, Some(words.join(" ")), warnings)
}

fn make_record(ints: &[(i64, usize)], caption: Option<String>, warnings: &mut Vec<DecodeWarning>) -> Option<Parsed> {
    let position = ints[0].1;
    let (length, length_pos) = *ints.last()?;
    if length <= 0 {
        warnings.push(DecodeWarning::new(
            WarningKind::NonPositiveLength,
            length_pos,
            format!("length {length}; record dropped"),
        ));
        return None;
    }
    let gap = (ints.len() == 2).then(|| {
        let (g, pos) = ints[0];
        if g < 0 {
            warnings.push(DecodeWarning::new(
                WarningKind::NegativeGap,
                pos,
                format!("gap {g} clamped to 0"),
            ));
        }
        usize::try_from(g.max(0)).unwrap_or(usize::MAX)
    });
    Some(Parsed {
        record: LengthRecord {
            gap,
            length: usize::try_from(length).unwrap_or(usize::MAX),
            caption,
        },
        position,
    })
}

/// Places parsed records on a transcript of `n` tokens, clamping overflow and
/// (partition only) extending under-coverage.
pub(super) fn layout(
    records: &[Parsed],
    n: usize,
    setting: Setting,
    target_len: usize,
    warnings: &mut Vec<DecodeWarning>,
) -> Vec<IndexSpan> {
    let mut spans: Vec<IndexSpan> = Vec::with_capacity(records.len());
    let mut cursor = 0usize;
    for (i, p) in records.iter().enumerate() {
        let start = cursor.saturating_add(p.record.gap.unwrap_or(0));
        let discarded = records.len() - i - 1;
        if start >= n {
            warnings.push(DecodeWarning::new(
                WarningKind::LengthOverflow,
                p.position,
                format!(
                    "segment starts at {start} past transcript end {n}; {} record(s) discarded",
                    discarded + 1
                ),
            ));
            break;
        }
        let end = start.saturating_add(p.record.length);
        if end > n {
            warnings.push(DecodeWarning::new(
                WarningKind::LengthOverflow,
                p.position,
                format!("segment end {end} clamped to {n}; {discarded} later record(s) discarded"),
            ));
            spans.push(IndexSpan {
                start,
                end: n,
                caption: p.record.caption.clone(),
            });
            cursor = n;
            break;
        }
        spans.push(IndexSpan {
            start,
            end,
            caption: p.record.caption.clone(),
        });
        cursor = end;
    }
    if setting == Setting::Partition && cursor < n {
        warnings.push(DecodeWarning::new(
            WarningKind::UnderCoverage,
            target_len,
            format!("lengths cover {cursor} of {n} tokens; last segment extended"),
        ));
        match spans.last_mut() {
            Some(last) => last.end = n,
            None => spans.push(IndexSpan::new(0, n)),
        }
    }
    spans
}
