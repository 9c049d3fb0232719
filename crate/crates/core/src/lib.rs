//! Speech inpainting toolkit.
//!
//! A gap `[t1, t2]` in a 16 kHz waveform is refilled by one of four
//! methods and scored against the original:
//!
//! * `li`: linear interpolation of log-mel frames, decoded by Griffin-Lim.
//! * `pt`: k-means units of continuous embeddings, with Euclidean lookup.
//! * `ft`: fine-tuned units, with cosine lookup through a learned projection.
//! * `asr-tts`: an externally synthesized rendering, aligned by DTW and
//!   time-stretched into the gap by WSOLA.
//!
//! Everything that needs a neural network (encoders, vocoders, recognizers)
//! is reached through the [`inpaint::Decoder`] and
//! [`inpaint::EmbeddingSource`] traits or through files in the formats of
//! [`formats`].

pub mod align;
pub mod audio;
pub mod embedding;
pub mod error;
pub mod formats;
pub mod harness;
pub mod inpaint;
pub mod metrics;
pub mod noise;
pub mod quantize;
pub mod resample;
pub mod spectral;
pub mod synth;

pub use audio::{read_wav, wav_info, write_wav, Waveform};
pub use embedding::EmbeddingSequence;
pub use error::{Error, Result};
pub use inpaint::{apply_corruption, run_blind, run_informed, MaskSpec, Method, Mode};
pub use metrics::{cer, stoi, MetricKind, Score};
pub use quantize::{Codebook, UnitSequence};
