mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use inpaint_core::harness::{DecoderKind, EmbedderKind};
use inpaint_core::inpaint::{Method, Mode};
use inpaint_core::noise::NoiseKind;

#[derive(Parser)]
#[command(name = "inpaint", version, about = "Speech inpainting: masks, codebooks, reconstruction and scoring")]
struct Cli {
    /// Repeat for more log output.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw random masks for a manifest or a single file.
    MaskGen(MaskGenArgs),
    /// Zero a mask interval of a WAV file.
    Corrupt(CorruptArgs),
    /// Train a k-means codebook over embeddings.
    TrainCodebook(TrainCodebookArgs),
    /// Map SIEF embeddings to unit indices.
    Quantize(QuantizeArgs),
    /// Reconstruct a masked region of a WAV file.
    Inpaint(InpaintArgs),
    /// Align a synthetic rendering and splice it into the mask.
    AsrTtsAssemble(AsrTtsArgs),
    /// Score a corpus and write per-utterance and summary tables.
    Eval(EvalArgs),
    /// Add noise at a target SNR.
    NoiseMix(NoiseMixArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Li,
    Pt,
    Ft,
    AsrTts,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Li => Method::Li,
            MethodArg::Pt => Method::Pt,
            MethodArg::Ft => Method::Ft,
            MethodArg::AsrTts => Method::AsrTts,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Informed,
    Blind,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Informed => Mode::Informed,
            ModeArg::Blind => Mode::Blind,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum NoiseArg {
    White,
    Crowd,
}

impl From<NoiseArg> for NoiseKind {
    fn from(n: NoiseArg) -> Self {
        match n {
            NoiseArg::White => NoiseKind::White,
            NoiseArg::Crowd => NoiseKind::Crowd,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DecoderArg {
    GriffinLim,
    External,
}

impl From<DecoderArg> for DecoderKind {
    fn from(d: DecoderArg) -> Self {
        match d {
            DecoderArg::GriffinLim => DecoderKind::GriffinLim,
            DecoderArg::External => DecoderKind::External,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EmbedderArg {
    Mel,
    Precomputed,
    External,
}

impl From<EmbedderArg> for EmbedderKind {
    fn from(e: EmbedderArg) -> Self {
        match e {
            EmbedderArg::Mel => EmbedderKind::Mel,
            EmbedderArg::Precomputed => EmbedderKind::Precomputed,
            EmbedderArg::External => EmbedderKind::External,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CodebookKindArg {
    Euclidean,
    Cosine,
}

/// A mask given as a JSON file or as explicit sample bounds.
#[derive(Args)]
struct MaskArgs {
    /// JSON mask file: {"t1": .., "t2": .., "unit": "samples"}.
    #[arg(long, conflicts_with_all = ["t1", "t2"])]
    mask: Option<PathBuf>,
    /// First masked sample (inclusive).
    #[arg(long, requires = "t2")]
    t1: Option<usize>,
    /// Last masked sample (inclusive).
    #[arg(long, requires = "t1")]
    t2: Option<usize>,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["manifest", "wav"]))]
struct MaskGenArgs {
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Single file; the mask is keyed on its file stem.
    #[arg(long)]
    wav: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    mask_ms: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = inpaint_core::harness::DEFAULT_EDGE_MARGIN_MS)]
    margin_ms: u32,
    /// Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CorruptArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    mask: MaskArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["manifest", "embeddings"]))]
struct TrainCodebookArgs {
    /// Embed every utterance of the manifest with `--embedder`.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// SIEF files to pool.
    #[arg(long, num_args = 1..)]
    embeddings: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "mel")]
    embedder: EmbedderArg,
    #[arg(long, default_value_t = 100)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    /// Keep every n-th frame.
    #[arg(long, default_value_t = 1)]
    subsample: usize,
    #[arg(long, value_enum, default_value = "euclidean")]
    kind: CodebookKindArg,
    /// Softmax temperature of a cosine codebook.
    #[arg(long, default_value_t = inpaint_core::quantize::DEFAULT_TEMPERATURE)]
    temperature: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct QuantizeArgs {
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long)]
    codebook: PathBuf,
    /// Unit file; the JSON header goes to `<out>.json`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct InpaintArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    mask: MaskArgs,
    #[arg(long, value_enum, default_value = "li")]
    method: MethodArg,
    #[arg(long, value_enum, default_value = "informed")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "griffin-lim")]
    decoder: DecoderArg,
    /// External decoder command; placeholders {input} {output} {kind} {codebook}.
    #[arg(long)]
    decoder_cmd: Option<String>,
    #[arg(long, value_enum, default_value = "mel")]
    embedder: EmbedderArg,
    /// External embedder command; placeholders {input} {output} {mask_first} {mask_last}.
    #[arg(long)]
    embedder_cmd: Option<String>,
    /// SIEF embeddings of the input, for `--embedder precomputed`.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    codebook: Option<PathBuf>,
    /// Synthetic rendering for `--method asr-tts`.
    #[arg(long)]
    synthetic: Option<PathBuf>,
    /// Griffin-Lim phase seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    gl_iters: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AsrTtsArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    synthetic: PathBuf,
    #[command(flatten)]
    mask: MaskArgs,
    #[arg(long, default_value_t = 5.0)]
    fade_ms: f64,
    /// Sakoe-Chiba band half-width in frames.
    #[arg(long)]
    dtw_band: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// TOML run configuration; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Mask lengths; repeat or separate with commas. 0 scores the unmasked signal.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    mask_ms: Vec<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    snr_db: Option<f64>,
    #[arg(long, value_enum)]
    noise: Option<NoiseArg>,
    /// Recording for crowd noise.
    #[arg(long)]
    noise_path: Option<PathBuf>,
    #[arg(long, value_enum)]
    decoder: Option<DecoderArg>,
    #[arg(long)]
    decoder_cmd: Option<String>,
    #[arg(long, value_enum)]
    embedder: Option<EmbedderArg>,
    #[arg(long)]
    embedder_cmd: Option<String>,
    #[arg(long)]
    codebook: Option<PathBuf>,
    /// Precomputed masks (JSON lines from mask-gen).
    #[arg(long)]
    masks: Option<PathBuf>,
    #[arg(long)]
    hypotheses: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct NoiseMixArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "white")]
    noise: NoiseArg,
    #[arg(long)]
    noise_path: Option<PathBuf>,
    #[arg(long)]
    snr_db: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::MaskGen(a) => commands::mask_gen(a),
        Command::Corrupt(a) => commands::corrupt(a),
        Command::TrainCodebook(a) => commands::train_codebook(a),
        Command::Quantize(a) => commands::quantize(a),
        Command::Inpaint(a) => commands::inpaint(a),
        Command::AsrTtsAssemble(a) => commands::asr_tts_assemble(a),
        Command::Eval(a) => commands::eval(a),
        Command::NoiseMix(a) => commands::noise_mix(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
