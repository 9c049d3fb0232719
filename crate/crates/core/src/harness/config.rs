use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::masks::DEFAULT_EDGE_MARGIN_MS;
use crate::inpaint::{FrameGeometry, InpaintOptions, Method, Mode};
use crate::noise::NoiseKind;
use crate::quantize::KmeansConfig;
use crate::spectral::GriffinLimConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecoderKind {
    GriffinLim,
    External,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbedderKind {
    /// Log-mel frames stand in for encoder embeddings.
    Mel,
    /// Per-utterance SIEF files named in the manifest.
    Precomputed,
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub kind: NoiseKind,
    pub snr_db: f64,
    /// Recording tiled for crowd noise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExternalCommands {
    pub decoder: Vec<String>,
    pub embedder: Vec<String>,
}

/// Everything that determines the output of an evaluation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub method: Method,
    pub mode: Mode,
    /// Mask lengths to evaluate; 0 evaluates the uncorrupted signal.
    pub mask_ms: Vec<u32>,
    pub seed: u64,
    pub workers: usize,
    pub edge_margin_ms: u32,
    pub output_dir: PathBuf,
    pub decoder: DecoderKind,
    pub embedder: EmbedderKind,
    /// Score the zero-filled input too, as method `zero-fill`.
    pub zero_fill_reference: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub codebook: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub masks: Option<PathBuf>,
    /// JSON lines of `{"utt", "mask_ms", "text"}` scored for CER.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hypotheses: Option<PathBuf>,
    /// JSON lines of score records merged into the output (e.g. PESQ).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub external_scores: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub asr_tts_manifest: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseConfig>,
    pub geometry: FrameGeometry,
    pub inpaint: InpaintOptions,
    pub griffin_lim: GriffinLimConfig,
    pub kmeans: KmeansConfig,
    pub external: ExternalCommands,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            method: Method::Li,
            mode: Mode::Informed,
            mask_ms: vec![100, 200, 400],
            seed: 0,
            workers: 1,
            edge_margin_ms: DEFAULT_EDGE_MARGIN_MS,
            output_dir: PathBuf::from("results"),
            decoder: DecoderKind::GriffinLim,
            embedder: EmbedderKind::Mel,
            zero_fill_reference: true,
            codebook: None,
            masks: None,
            hypotheses: None,
            external_scores: None,
            asr_tts_manifest: None,
            noise: None,
            geometry: FrameGeometry::default(),
            inpaint: InpaintOptions::default(),
            griffin_lim: GriffinLimConfig::default(),
            kmeans: KmeansConfig::default(),
            external: ExternalCommands::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parse a TOML file; relative paths inside it are resolved against the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
            _ => e.into(),
        })?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(base) = path.parent() {
            cfg.resolve_paths(base);
        }
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        for p in [
            &mut self.codebook,
            &mut self.masks,
            &mut self.hypotheses,
            &mut self.external_scores,
            &mut self.asr_tts_manifest,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        if let Some(p) = self.noise.as_mut().and_then(|n| n.path.as_mut()) {
            fix(p);
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.mask_ms.is_empty() {
            return Err(Error::Config("mask_ms lists no mask lengths".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if self.mode == Mode::Blind && matches!(self.method, Method::Li | Method::AsrTts) {
            return Err(Error::BlindUnsupported(self.method.to_string()));
        }
        if let Some(n) = &self.noise {
            if n.snr_db.is_nan() {
                return Err(Error::Config("noise.snr_db is NaN".into()));
            }
            if n.kind == NoiseKind::Crowd && n.path.is_none() {
                return Err(Error::Config("crowd noise needs noise.path".into()));
            }
        }
        self.geometry.validate()?;
        self.inpaint.mel.validate()?;
        self.inpaint.wsola.validate()?;
        Ok(())
    }
}
