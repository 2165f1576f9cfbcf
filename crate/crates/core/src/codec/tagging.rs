use super::{DecodeReport, DecodeWarning, WarningKind};
use crate::types::{CodecConfig, IndexSpan, Mode, Setting};

pub(super) fn encode(spans: &[IndexSpan], captions: &[Vec<&str>], n: usize, cfg: &CodecConfig) -> Vec<String> {
    let mut tags = vec![cfg.pad_token.clone(); n];
    for (span, words) in spans.iter().zip(captions) {
        let (a, b) = span.bounds();
        let len = b - a;
        tags[a] = cfg.sep_token.clone();
        match cfg.setting {
            Setting::Partition => {
                let k = words.len().min(len - 1);
                for (slot, w) in tags[a + 1..].iter_mut().zip(&words[..k]) {
                    *slot = (*w).to_owned();
                }
            }
            Setting::Original => {
                if len == 1 {
                    continue;
                }
                if words.len() >= len - 1 {
                    // caption fills the span; its last word marks the end
                    for (slot, w) in tags[a + 1..b].iter_mut().zip(words) {
                        *slot = (*w).to_owned();
                    }
                } else {
                    for (slot, w) in tags[a + 1..].iter_mut().zip(words) {
                        *slot = (*w).to_owned();
                    }
                    tags[b - 1] = cfg.end_token.clone();
                }
            }
        }
    }
    tags
}

pub(super) fn decode(tokens: &[&str], n: usize, cfg: &CodecConfig) -> DecodeReport {
    let mut warnings = Vec::new();
    if tokens.len() != n {
        warnings.push(DecodeWarning::new(
            WarningKind::LengthMismatch,
            tokens.len().min(n),
            format!("{} tags for {} transcript tokens", tokens.len(), n),
        ));
    }
    let usable = &tokens[..tokens.len().min(n)];
    let spans = match cfg.setting {
        Setting::Partition => decode_partition(usable, n, cfg, &mut warnings),
        Setting::Original => decode_original(usable, cfg, &mut warnings),
    };
    DecodeReport { spans, warnings }
}

struct Open<'a> {
    start: usize,
    words: Vec<&'a str>,
    last_word: Option<usize>,
    in_pads: bool,
}

impl<'a> Open<'a> {
    fn new(start: usize) -> Self {
        Self {
            start,
            words: Vec::new(),
            last_word: None,
            in_pads: false,
        }
    }

    fn finish(self, end: usize, mode: Mode) -> IndexSpan {
        IndexSpan {
            start: self.start,
            end,
            caption: (mode == Mode::SegCap).then(|| self.words.join(" ")),
        }
    }

    /// Close without an end tag: the span stops after its last caption word,
    /// or is a single token when it has none.
    fn finish_implicit(self, mode: Mode) -> IndexSpan {
        let end = self.last_word.map_or(self.start + 1, |p| p + 1);
        self.finish(end, mode)
    }

    fn push_word(&mut self, pos: usize, word: &'a str, warnings: &mut Vec<DecodeWarning>) {
        if self.in_pads {
            warnings.push(DecodeWarning::new(
                WarningKind::WordAfterPad,
                pos,
                format!("caption word {word:?} after padding"),
            ));
        }
        self.words.push(word);
        self.last_word = Some(pos);
    }
}

fn decode_partition<'a>(
    tokens: &[&'a str],
    n: usize,
    cfg: &CodecConfig,
    warnings: &mut Vec<DecodeWarning>,
) -> Vec<IndexSpan> {
    let mut done: Vec<IndexSpan> = Vec::new();
    let mut open: Option<Open<'a>> = None;
    for (i, &tok) in tokens.iter().enumerate() {
        if tok == cfg.sep_token {
            if let Some(prev) = open.take() {
                done.push(prev.finish(i, cfg.mode));
            }
            open = Some(Open::new(i));
            continue;
        }
        let cur = open.get_or_insert_with(|| {
            warnings.push(DecodeWarning::new(
                WarningKind::MissingInitialSep,
                0,
                "first tag opens a segment implicitly",
            ));
            Open::new(0)
        });
        if tok == cfg.pad_token {
            cur.in_pads = true;
        } else if tok == cfg.end_token || cfg.mode == Mode::SegOnly {
            warnings.push(DecodeWarning::new(
                WarningKind::UnexpectedToken,
                i,
                format!("{tok:?} is not a partition tag"),
            ));
            cur.in_pads = true;
        } else {
            cur.push_word(i, tok, warnings);
        }
    }
    // missing trailing tags continue the last segment
    let last = open.unwrap_or_else(|| Open::new(0));
    done.push(last.finish(n, cfg.mode));
    done
}

fn decode_original<'a>(tokens: &[&'a str], cfg: &CodecConfig, warnings: &mut Vec<DecodeWarning>) -> Vec<IndexSpan> {
    let mut done = Vec::new();
    let mut open: Option<Open<'a>> = None;
    for (i, &tok) in tokens.iter().enumerate() {
        if tok == cfg.sep_token {
            if let Some(prev) = open.take() {
                done.push(prev.finish_implicit(cfg.mode));
            }
            open = Some(Open::new(i));
        } else if tok == cfg.end_token {
            match open.take() {
                Some(cur) => done.push(cur.finish(i + 1, cfg.mode)),
                None => warnings.push(DecodeWarning::new(
                    WarningKind::StrayEnd,
                    i,
                    "end tag outside any segment",
                )),
            }
        } else if tok == cfg.pad_token {
            if let Some(cur) = open.as_mut() {
                cur.in_pads = true;
            }
        } else {
            match open.as_mut() {
                Some(cur) if cfg.mode == Mode::SegCap => cur.push_word(i, tok, warnings),
                Some(cur) => {
                    warnings.push(DecodeWarning::new(
                        WarningKind::UnexpectedToken,
                        i,
                        format!("{tok:?} is not a segmentation tag"),
                    ));
                    cur.in_pads = true;
                }
                None => warnings.push(DecodeWarning::new(
                    WarningKind::UnexpectedToken,
                    i,
                    format!("{tok:?} outside any segment"),
                )),
            }
        }
    }
    if let Some(cur) = open {
        done.push(cur.finish_implicit(cfg.mode));
    }
    done
}
