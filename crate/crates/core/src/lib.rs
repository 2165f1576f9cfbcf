//! Sequence-generation tooling for dense video captioning.
//!
//! Gold event segments over a timestamped ASR transcript are serialized into
//! target strings (tagging or length formulations, with or without captions),
//! model output is parsed back, and predictions are scored with mIoU,
//! threshold precision/recall/F1 and IoU-gated caption metrics.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases below pin the common `f64` instantiation.

pub mod alignment;
pub mod baselines;
pub mod codec;
pub mod corpus;
pub mod metrics;
pub mod scalar;
pub mod types;

pub use scalar::Scalar;
pub use types::{
    validate_annotation, AsrToken, AsrTranscript, CodecConfig, Formulation, FrameTimeline, IndexSpan, Mode, Segment,
    Setting, TimeMs, VideoAnnotation, Violation,
};

pub type TimeMs64 = TimeMs<f64>;
pub type AsrToken64 = AsrToken<f64>;
pub type AsrTranscript64 = AsrTranscript<f64>;
pub type Segment64 = Segment<f64>;
pub type FrameTimeline64 = FrameTimeline<f64>;
pub type VideoAnnotation64 = VideoAnnotation<f64>;

pub type Segment32 = Segment<f32>;
pub type VideoAnnotation32 = VideoAnnotation<f32>;
