//! Sentence-level caption metrics: BLEU-4, ROUGE-L, CIDEr-D and a
//! simplified METEOR.
//!
//! All inputs are lowercased and stripped of punctuation, then split on
//! whitespace, before scoring.

use std::collections::HashMap;

use crate::scalar::{mean, Scalar};

use super::MetricsError;

const BLEU_EPSILON: f64 = 1e-9;
const MAX_N: usize = 4;
const STEM_CHARS: usize = 4;

/// Lowercase, drop every character that is neither alphanumeric nor whitespace, split.
pub fn caption_tokens(text: &str) -> Vec<String> {
    let cleaned: String = text
        .chars()
        .filter(|c| c.is_alphanumeric() || c.is_whitespace())
        .flat_map(char::to_lowercase)
        .collect();
    cleaned.split_whitespace().map(str::to_owned).collect()
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Sentence BLEU with uniform 1..4-gram weights and a brevity penalty.
/// Zero match counts are replaced by a tiny epsilon.
pub fn bleu4<T: Scalar>(hyp: &str, reference: &str) -> T {
    let h = caption_tokens(hyp);
    let r = caption_tokens(reference);
    if h.is_empty() {
        return T::zero();
    }
    let mut log_sum = T::zero();
    for n in 1..=MAX_N {
        let hc = ngram_counts(&h, n);
        let rc = ngram_counts(&r, n);
        let matches: usize = hc.iter().map(|(g, &c)| c.min(rc.get(g).copied().unwrap_or(0))).sum();
        let total = (h.len() + 1).saturating_sub(n).max(1);
        let numer = if matches == 0 {
            T::of(BLEU_EPSILON)
        } else {
            T::of_usize(matches)
        };
        log_sum = log_sum + (numer / T::of_usize(total)).ln();
    }
    let c = T::of_usize(h.len());
    let rl = T::of_usize(r.len());
    let bp = if c < rl { (T::one() - rl / c).exp() } else { T::one() };
    bp * (log_sum / T::of_usize(MAX_N)).exp()
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// LCS-based F-measure `(1+β²)PR / (R + β²P)`.
pub fn rouge_l<T: Scalar>(hyp: &str, reference: &str, beta: T) -> T {
    let h = caption_tokens(hyp);
    let r = caption_tokens(reference);
    if h.is_empty() || r.is_empty() {
        return T::zero();
    }
    let lcs = lcs_len(&h, &r);
    if lcs == 0 {
        return T::zero();
    }
    let p = T::of_usize(lcs) / T::of_usize(h.len());
    let rec = T::of_usize(lcs) / T::of_usize(r.len());
    let b2 = beta * beta;
    (T::one() + b2) * p * rec / (rec + b2 * p)
}

/// Per-pair CIDEr-D scores and their mean.
#[derive(Debug, Clone, PartialEq)]
pub struct CiderScores<T> {
    pub per_pair: Vec<T>,
    pub mean: T,
}

/// CIDEr-D over `(hypothesis, reference)` pairs.
///
/// Document frequencies come from the reference side of `pairs`. The IDF is
/// smoothed, `ln((1 + N) / (1 + df)) + 1`, so that n-grams shared by every
/// reference (including the single-pair case) keep a positive weight.
pub fn cider_d<T: Scalar, H: AsRef<str>, R: AsRef<str>>(
    pairs: &[(H, R)],
    sigma: T,
) -> Result<CiderScores<T>, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::NoPairs);
    }
    let tokenized: Vec<(Vec<String>, Vec<String>)> = pairs
        .iter()
        .map(|(h, r)| (caption_tokens(h.as_ref()), caption_tokens(r.as_ref())))
        .collect();

    let mut df: Vec<HashMap<&[String], usize>> = vec![HashMap::new(); MAX_N];
    for (_, r) in &tokenized {
        for (n, table) in df.iter_mut().enumerate() {
            for gram in ngram_counts(r, n + 1).into_keys() {
                *table.entry(gram).or_insert(0) += 1;
            }
        }
    }
    let docs = T::of_usize(pairs.len());
    let idf = |n: usize, gram: &[String]| -> T {
        let d = T::of_usize(df[n].get(gram).copied().unwrap_or(0));
        ((T::one() + docs) / (T::one() + d)).ln() + T::one()
    };

    let two_sigma_sq = T::of(2.0) * sigma * sigma;
    let per_pair: Vec<T> = tokenized
        .iter()
        .map(|(h, r)| {
            let delta = T::of_usize(h.len()) - T::of_usize(r.len());
            let penalty = (-(delta * delta) / two_sigma_sq).exp();
            let sims: Vec<T> = (0..MAX_N)
                .map(|n| {
                    let vh = tfidf(h, n, &idf);
                    let vr = tfidf(r, n, &idf);
                    let norm = |v: &HashMap<&[String], T>| v.values().fold(T::zero(), |a, &w| a + w * w).sqrt();
                    let (nh, nr) = (norm(&vh), norm(&vr));
                    if nh == T::zero() || nr == T::zero() {
                        return T::zero();
                    }
                    // clipped: hypothesis weights never exceed the reference's
                    let dot = vh.iter().fold(T::zero(), |acc, (g, &w)| match vr.get(g) {
                        Some(&rw) => acc + w.min(rw) * rw,
                        None => acc,
                    });
                    dot / (nh * nr) * penalty
                })
                .collect();
            mean(&sims) * T::of(10.0)
        })
        .collect();
    let m = mean(&per_pair);
    Ok(CiderScores { per_pair, mean: m })
}

fn tfidf<'a, T: Scalar>(
    tokens: &'a [String],
    n: usize,
    idf: &impl Fn(usize, &[String]) -> T,
) -> HashMap<&'a [String], T> {
    ngram_counts(tokens, n + 1)
        .into_iter()
        .map(|(g, c)| (g, T::of_usize(c) * idf(n, g)))
        .collect()
}

fn stem(word: &str) -> Option<&str> {
    let mut idx = word.char_indices().map(|(i, _)| i).chain(std::iter::once(word.len()));
    let cut = idx.nth(STEM_CHARS)?;
    Some(&word[..cut])
}

/// Unigram METEOR without synonymy: exact matches, then 4-character prefix
/// matches between words of at least four characters, with the usual
/// fragmentation penalty.
pub fn meteor_lite<T: Scalar>(hyp: &str, reference: &str) -> T {
    let h = caption_tokens(hyp);
    let r = caption_tokens(reference);
    if h.is_empty() || r.is_empty() {
        return T::zero();
    }
    let mut aligned: Vec<Option<usize>> = vec![None; h.len()];
    let mut taken = vec![false; r.len()];
    for (i, w) in h.iter().enumerate() {
        if let Some(j) = (0..r.len()).find(|&j| !taken[j] && &r[j] == w) {
            aligned[i] = Some(j);
            taken[j] = true;
        }
    }
    for (i, w) in h.iter().enumerate() {
        if aligned[i].is_some() {
            continue;
        }
        let Some(hs) = stem(w) else { continue };
        if let Some(j) = (0..r.len()).find(|&j| !taken[j] && stem(&r[j]) == Some(hs)) {
            aligned[i] = Some(j);
            taken[j] = true;
        }
    }
    let pairs: Vec<(usize, usize)> = aligned
        .iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| (i, j)))
        .collect();
    let m = pairs.len();
    if m == 0 {
        return T::zero();
    }
    let chunks = 1 + pairs
        .windows(2)
        .filter(|w| !(w[1].0 == w[0].0 + 1 && w[1].1 == w[0].1 + 1))
        .count();
    let p = T::of_usize(m) / T::of_usize(h.len());
    let rec = T::of_usize(m) / T::of_usize(r.len());
    let fmean = T::of(10.0) * p * rec / (rec + T::of(9.0) * p);
    let frag = T::of_usize(chunks) / T::of_usize(m);
    let penalty = T::of(0.5) * frag * frag * frag;
    fmean * (T::one() - penalty)
}
