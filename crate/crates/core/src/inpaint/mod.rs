//! Mask geometry, corruption, stitching and the informed/blind pipelines.

mod geometry;
mod pipeline;
mod stitch;

pub use geometry::{apply_corruption, samples_to_frames, FrameGeometry, FrameInterval, MaskSpec};
pub use pipeline::{
    run_blind, run_informed, Decoder, EmbeddingSource, ExternalDecoder, ExternalEmbedder,
    GriffinLimDecoder, InpaintDeps, InpaintOptions, InpaintResult, MelEmbedder, Method, Mode,
    PrecomputedEmbeddings,
};
pub use stitch::{fade_samples, interpolate_mel_linear, stitch_crossfade, DEFAULT_FADE_SECS};
