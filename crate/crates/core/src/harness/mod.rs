//! Corpus-level orchestration: manifests, run configuration, mask
//! generation and the evaluation driver.

mod config;
mod eval;
mod manifest;
mod masks;

pub use config::{DecoderKind, EmbedderKind, ExternalCommands, NoiseConfig, RunConfig};
pub use eval::{
    run_eval, summarize, summary_csv, write_outputs, EvalOutput, Failure, ScoreRecord,
    SummaryRow, INPUT, ZERO_FILL,
};
pub use manifest::{load_asr_tts_entries, AsrTtsEntry, Manifest, ManifestEntry};
pub use masks::{
    draw_mask, gen_masks, keyed_seed, ms_to_samples, MaskGenReport, MaskRecord, UttLength,
    DEFAULT_EDGE_MARGIN_MS,
};
