//! Random segmentation baselines.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::scalar::Scalar;
use crate::types::{IndexSpan, Segment, TimeMs};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BaselineError {
    #[error("EmptyTranscript: cannot partition zero tokens")]
    EmptyTranscript,
    #[error("ZeroDuration: duration must be positive")]
    ZeroDuration,
    #[error("InvalidConfig: need 1 <= n_min <= n_max, got {n_min}..={n_max}")]
    InvalidConfig { n_min: usize, n_max: usize },
}

/// Segment-count range and seed. Defaults to `n ∈ {1, …, 15}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BaselineConfig {
    pub n_min: usize,
    pub n_max: usize,
    pub seed: u64,
}

impl BaselineConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            n_min: 1,
            n_max: 15,
            seed,
        }
    }

    pub fn check(&self) -> Result<(), BaselineError> {
        if self.n_min >= 1 && self.n_min <= self.n_max {
            Ok(())
        } else {
            Err(BaselineError::InvalidConfig {
                n_min: self.n_min,
                n_max: self.n_max,
            })
        }
    }

    /// Deterministic stream for this config's seed.
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    fn draw_n<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.random_range(self.n_min..=self.n_max)
    }
}

/// Cuts `[0, transcript_len)` into `n` non-empty spans at `n − 1` distinct
/// uniformly drawn cut points; `n` is uniform on `n_min..=n_max`, capped at
/// the transcript length.
pub fn random_partition<R: Rng + ?Sized>(
    transcript_len: usize,
    cfg: &BaselineConfig,
    rng: &mut R,
) -> Result<Vec<IndexSpan>, BaselineError> {
    cfg.check()?;
    if transcript_len == 0 {
        return Err(BaselineError::EmptyTranscript);
    }
    let n = cfg.draw_n(rng).min(transcript_len);
    let mut cuts: Vec<usize> = index::sample(rng, transcript_len - 1, n - 1)
        .into_iter()
        .map(|c| c + 1)
        .collect();
    cuts.sort_unstable();
    let mut spans = Vec::with_capacity(n);
    let mut start = 0;
    for end in cuts.into_iter().chain(std::iter::once(transcript_len)) {
        spans.push(IndexSpan::new(start, end));
        start = end;
    }
    Ok(spans)
}

/// `n` segments from `2n` sorted uniform draws on `(0, duration)`, paired
/// consecutively.
pub fn random_segmentation<T: Scalar, R: Rng + ?Sized>(
    duration: TimeMs<T>,
    cfg: &BaselineConfig,
    rng: &mut R,
) -> Result<Vec<Segment<T>>, BaselineError> {
    cfg.check()?;
    let d = duration.get();
    if d.is_nan() || d <= T::zero() {
        return Err(BaselineError::ZeroDuration);
    }
    let n = cfg.draw_n(rng);
    loop {
        let mut points: Vec<T> = (0..2 * n).map(|_| T::of(rng.random::<f64>()) * d).collect();
        points.sort_by(|a, b| a.partial_cmp(b).expect("finite draws"));
        // redraw on a coincident pair, which would give an empty segment
        if points.chunks(2).any(|p| p[0] >= p[1]) {
            continue;
        }
        return Ok(points.chunks(2).map(|p| Segment::new(p[0], p[1])).collect());
    }
}
