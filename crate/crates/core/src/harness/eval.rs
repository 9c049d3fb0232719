use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audio::{read_wav, Waveform};
use crate::error::{Error, Result};
use crate::formats::{read_codebook, read_jsonl, read_sief, write_jsonl};
use crate::harness::config::{DecoderKind, EmbedderKind, RunConfig};
use crate::harness::manifest::{load_asr_tts_entries, Manifest, ManifestEntry};
use crate::harness::masks::{draw_mask, keyed_seed, MaskRecord};
use crate::inpaint::{
    apply_corruption, run_blind, run_informed, Decoder, EmbeddingSource, ExternalDecoder,
    ExternalEmbedder, GriffinLimDecoder, InpaintDeps, MaskSpec, MelEmbedder, Method, Mode,
    PrecomputedEmbeddings,
};
use crate::metrics::{cer, eval_window, snr_measure, stoi, MetricKind};
use crate::noise::{mix_noise_at_snr, NoiseKind, NoiseSource};
use crate::quantize::Codebook;
use crate::resample::resample;

/// Method label of the unprocessed zero-filled input.
pub const ZERO_FILL: &str = "zero-fill";
/// Method label of the noisy input's own measurements.
pub const INPUT: &str = "input";

const NOISE_SALT: u64 = 0x006e_6f69_7365;
const Z95: f64 = 1.959_963_984_540_054;

/// One line of the per-utterance score file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub utt: String,
    pub metric: MetricKind,
    pub mask_ms: u32,
    pub method: String,
    pub mode: Mode,
    pub value: f64,
}

impl ScoreRecord {
    fn key(&self) -> (&str, u32, MetricKind, &str, Mode) {
        (&self.utt, self.mask_ms, self.metric, &self.method, self.mode)
    }
}

/// Aggregate over utterances for one (method, mode, mask, metric) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub method: String,
    pub mode: Mode,
    pub mask_ms: u32,
    pub metric: MetricKind,
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    /// Normal-approximation 95 % half-width of the mean.
    pub ci95_normal: f64,
    /// Binomial-proportion 95 % half-width; only for metrics in `[0, 1]`.
    pub ci95_binomial: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub utt: String,
    pub mask_ms: u32,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalOutput {
    pub records: Vec<ScoreRecord>,
    pub summary: Vec<SummaryRow>,
    pub failures: Vec<Failure>,
    /// `(utt, reason)` for utterances too short to hold a mask.
    pub skipped: Vec<(String, String)>,
}

impl EvalOutput {
    pub fn is_partial(&self) -> bool {
        !self.failures.is_empty()
    }
}

#[derive(Deserialize)]
struct Hypothesis {
    utt: String,
    #[serde(default)]
    mask_ms: u32,
    text: String,
}

struct Shared {
    decoder: Option<Box<dyn Decoder>>,
    embedder: Option<Box<dyn EmbeddingSource>>,
    codebook: Option<Codebook>,
    masks: Option<HashMap<(String, u32), MaskSpec>>,
    hypotheses: HashMap<(String, u32), String>,
    synthetic: HashMap<String, std::path::PathBuf>,
    noise: Option<(NoiseSource, f64)>,
}

fn load_shared(cfg: &RunConfig) -> Result<Shared> {
    let rate = cfg.inpaint.mel.sample_rate;
    let needs_decoder = cfg.method != Method::AsrTts;
    let decoder: Option<Box<dyn Decoder>> = match (needs_decoder, cfg.decoder) {
        (false, _) => None,
        (true, DecoderKind::GriffinLim) => Some(Box::new(GriffinLimDecoder::new(
            &cfg.inpaint.mel,
            cfg.griffin_lim,
        )?)),
        (true, DecoderKind::External) => Some(Box::new(ExternalDecoder {
            command: cfg.external.decoder.clone(),
            codebook_path: cfg.codebook.clone(),
            sample_rate: rate,
        })),
    };
    let embedder: Option<Box<dyn EmbeddingSource>> = match cfg.embedder {
        EmbedderKind::Mel => Some(Box::new(MelEmbedder::new(&cfg.inpaint.mel)?)),
        EmbedderKind::External => Some(Box::new(ExternalEmbedder {
            command: cfg.external.embedder.clone(),
            geometry: cfg.geometry,
        })),
        EmbedderKind::Precomputed => None,
    };
    let codebook = cfg.codebook.as_ref().map(read_codebook).transpose()?;
    let masks = match &cfg.masks {
        Some(p) => {
            let recs: Vec<MaskRecord> = read_jsonl(p)?;
            let mut map = HashMap::new();
            for r in recs {
                map.insert((r.utt.clone(), r.mask_ms), r.mask()?);
            }
            Some(map)
        }
        None => None,
    };
    let hypotheses = match &cfg.hypotheses {
        Some(p) => read_jsonl::<Hypothesis>(p)?
            .into_iter()
            .map(|h| ((h.utt, h.mask_ms), h.text))
            .collect(),
        None => HashMap::new(),
    };
    let synthetic = match &cfg.asr_tts_manifest {
        Some(p) => load_asr_tts_entries(p)?
            .into_iter()
            .map(|e| (e.utt, e.synthetic_wav))
            .collect(),
        None => HashMap::new(),
    };
    let noise = match &cfg.noise {
        None => None,
        Some(n) => {
            let src = match n.kind {
                NoiseKind::White => NoiseSource::White,
                NoiseKind::Crowd => {
                    let path = n.path.as_ref().ok_or_else(|| {
                        Error::Config("crowd noise needs noise.path".into())
                    })?;
                    NoiseSource::Recording(resample(&read_wav(path)?, rate)?)
                }
            };
            Some((src, n.snr_db))
        }
    };
    Ok(Shared {
        decoder,
        embedder,
        codebook,
        masks,
        hypotheses,
        synthetic,
        noise,
    })
}

fn load_at_rate(path: &Path, rate: u32) -> Result<Waveform> {
    resample(&read_wav(path)?, rate)
}

enum MaskOutcome {
    Scored(Vec<ScoreRecord>),
    Skipped(String),
}

struct UttOutcome {
    utt: String,
    results: Vec<(u32, Result<MaskOutcome>)>,
    input_records: Vec<ScoreRecord>,
    load_error: Option<String>,
}

fn eval_utterance(entry: &ManifestEntry, cfg: &RunConfig, shared: &Shared) -> UttOutcome {
    let mut out = UttOutcome {
        utt: entry.utt_id.clone(),
        results: Vec::new(),
        input_records: Vec::new(),
        load_error: None,
    };
    let rate = cfg.inpaint.mel.sample_rate;
    let prepared = (|| -> Result<_> {
        let clean = load_at_rate(&entry.wav_path, rate)?;
        let original = match &shared.noise {
            Some((src, snr)) => {
                let noisy =
                    mix_noise_at_snr(&clean, src, *snr, keyed_seed(cfg.seed ^ NOISE_SALT, &entry.utt_id))?;
                let s = snr_measure(&clean, &noisy)?;
                if s.value.is_finite() {
                    out.input_records.push(ScoreRecord {
                        utt: entry.utt_id.clone(),
                        metric: MetricKind::Snr,
                        mask_ms: 0,
                        method: INPUT.into(),
                        mode: cfg.mode,
                        value: s.value,
                    });
                }
                noisy
            }
            None => clean,
        };
        let precomputed = match cfg.embedder {
            EmbedderKind::Precomputed => {
                let p = entry.embedding_path.as_ref().ok_or_else(|| Error::MissingDependency {
                    method: cfg.method.to_string(),
                    what: format!("an embedding_path for {}", entry.utt_id),
                })?;
                Some(PrecomputedEmbeddings {
                    sequence: read_sief(p)?,
                })
            }
            _ => None,
        };
        let synthetic_path = entry
            .synthetic_wav
            .as_ref()
            .or_else(|| shared.synthetic.get(&entry.utt_id));
        let synthetic = match (cfg.method, synthetic_path) {
            (Method::AsrTts, Some(p)) => Some(read_wav(p)?),
            _ => None,
        };
        Ok((original, precomputed, synthetic))
    })();
    let (original, precomputed, synthetic) = match prepared {
        Ok(v) => v,
        Err(e) => {
            out.load_error = Some(e.to_string());
            return out;
        }
    };
    let embedder: Option<&dyn EmbeddingSource> = match &precomputed {
        Some(p) => Some(p),
        None => shared.embedder.as_deref(),
    };
    let deps = InpaintDeps {
        decoder: shared.decoder.as_deref(),
        embedder,
        codebook: shared.codebook.as_ref(),
        synthetic: synthetic.as_ref(),
    };
    for &mask_ms in &cfg.mask_ms {
        let r = eval_mask(entry, cfg, shared, &deps, &original, mask_ms);
        out.results.push((mask_ms, r));
    }
    out
}

fn eval_mask(
    entry: &ManifestEntry,
    cfg: &RunConfig,
    shared: &Shared,
    deps: &InpaintDeps<'_>,
    original: &Waveform,
    mask_ms: u32,
) -> Result<MaskOutcome> {
    let (len, rate) = (original.len(), original.sample_rate());
    let mask = if mask_ms == 0 {
        None
    } else if let Some(map) = &shared.masks {
        match map.get(&(entry.utt_id.clone(), mask_ms)) {
            Some(m) => Some(*m),
            None => return Ok(MaskOutcome::Skipped(format!("no {mask_ms} ms mask in mask file"))),
        }
    } else {
        match draw_mask(&entry.utt_id, len, rate, mask_ms, cfg.seed, cfg.edge_margin_ms) {
            Ok(m) => Some(m),
            Err(Error::TooShort { .. }) => {
                return Ok(MaskOutcome::Skipped(format!("too short for a {mask_ms} ms mask")))
            }
            Err(e) => return Err(e),
        }
    };
    let corrupted = match &mask {
        Some(m) => apply_corruption(original, m)?,
        None => original.clone(),
    };
    let result = match cfg.mode {
        Mode::Informed => run_informed(original, mask.as_ref(), cfg.method, deps, &cfg.inpaint)?,
        Mode::Blind => run_blind(&corrupted, cfg.method, deps)?,
    };
    let output = result.waveform.fit_to_len(len);
    let centre = mask.unwrap_or(MaskSpec { t1: len / 2, t2: len / 2 });
    let window = eval_window(&centre, len, rate)?;
    let reference = window.cut(original)?;
    let record = |method: &str, metric, value| ScoreRecord {
        utt: entry.utt_id.clone(),
        metric,
        mask_ms,
        method: method.to_string(),
        mode: cfg.mode,
        value,
    };
    let method = cfg.method.as_str();
    let mut records = vec![record(
        method,
        MetricKind::Stoi,
        stoi(&reference, &window.cut(&output)?)?.value,
    )];
    if cfg.zero_fill_reference && mask.is_some() {
        records.push(record(
            ZERO_FILL,
            MetricKind::Stoi,
            stoi(&reference, &window.cut(&corrupted)?)?.value,
        ));
    }
    if let Some(text) = shared.hypotheses.get(&(entry.utt_id.clone(), mask_ms)) {
        records.push(record(method, MetricKind::Cer, cer(&entry.transcript, text)?.value));
    }
    Ok(MaskOutcome::Scored(records))
}

/// Score every utterance of `manifest` under `cfg`. Per-utterance failures
/// are collected rather than aborting the run. Output order is canonical,
/// so the worker count never changes the result.
pub fn run_eval(manifest: &Manifest, cfg: &RunConfig) -> Result<EvalOutput> {
    cfg.validate()?;
    let shared = load_shared(cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let outcomes: Vec<UttOutcome> = pool.install(|| {
        manifest
            .entries
            .par_iter()
            .map(|e| eval_utterance(e, cfg, &shared))
            .collect()
    });

    let mut out = EvalOutput::default();
    for o in outcomes {
        out.records.extend(o.input_records);
        if let Some(err) = o.load_error {
            warn!("{}: {err}", o.utt);
            for &mask_ms in &cfg.mask_ms {
                out.failures.push(Failure {
                    utt: o.utt.clone(),
                    mask_ms,
                    error: err.clone(),
                });
            }
            continue;
        }
        for (mask_ms, r) in o.results {
            match r {
                Ok(MaskOutcome::Scored(recs)) => out.records.extend(recs),
                Ok(MaskOutcome::Skipped(why)) => out.skipped.push((format!("{}@{mask_ms}", o.utt), why)),
                Err(e) => {
                    warn!("{} ({mask_ms} ms): {e}", o.utt);
                    out.failures.push(Failure {
                        utt: o.utt.clone(),
                        mask_ms,
                        error: e.to_string(),
                    });
                }
            }
        }
    }
    if let Some(p) = &cfg.external_scores {
        out.records.extend(read_jsonl::<ScoreRecord>(p)?);
    }
    out.records.sort_by(|a, b| a.key().cmp(&b.key()));
    out.failures
        .sort_by(|a, b| (&a.utt, a.mask_ms).cmp(&(&b.utt, b.mask_ms)));
    out.skipped.sort();
    out.summary = summarize(&out.records);
    info!(
        "{} scores, {} failures, {} skipped",
        out.records.len(),
        out.failures.len(),
        out.skipped.len()
    );
    Ok(out)
}

/// Mean, spread and 95 % half-widths per (method, mode, mask, metric).
/// Non-finite values are left out.
pub fn summarize(records: &[ScoreRecord]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(&str, Mode, u32, MetricKind), Vec<f64>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.value.is_finite()) {
        groups
            .entry((&r.method, r.mode, r.mask_ms, r.metric))
            .or_default()
            .push(r.value);
    }
    groups
        .into_iter()
        .map(|((method, mode, mask_ms, metric), v)| {
            let n = v.len();
            let mean = v.iter().sum::<f64>() / n as f64;
            let std = if n > 1 {
                (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            let ci95_normal = Z95 * std / (n as f64).sqrt();
            let bounded = metric == MetricKind::Stoi;
            let ci95_binomial =
                bounded.then(|| Z95 * (mean.clamp(0.0, 1.0) * (1.0 - mean.clamp(0.0, 1.0)) / n as f64).sqrt());
            SummaryRow {
                method: method.to_string(),
                mode,
                mask_ms,
                metric,
                n,
                mean,
                std,
                ci95_normal,
                ci95_binomial,
            }
        })
        .collect()
}

pub fn summary_csv(rows: &[SummaryRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::External(format!("csv: {e}"));
    w.write_record([
        "method",
        "mode",
        "mask_ms",
        "metric",
        "n",
        "mean",
        "std",
        "ci95_normal",
        "ci95_binomial",
    ])
    .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.method.clone(),
            r.mode.to_string(),
            r.mask_ms.to_string(),
            r.metric.to_string(),
            r.n.to_string(),
            format!("{:.6}", r.mean),
            format!("{:.6}", r.std),
            format!("{:.6}", r.ci95_normal),
            r.ci95_binomial.map_or(String::new(), |v| format!("{v:.6}")),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::External(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes `scores.jsonl`, `summary.csv`, `config.toml` and, when anything
/// failed, `failures.jsonl` into `dir`.
pub fn write_outputs(out: &EvalOutput, cfg: &RunConfig, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|source| Error::Unwritable {
        path: dir.to_path_buf(),
        source,
    })?;
    write_jsonl(&out.records, dir.join("scores.jsonl"))?;
    fs::write(dir.join("summary.csv"), summary_csv(&out.summary)?)?;
    fs::write(dir.join("config.toml"), cfg.to_toml()?)?;
    let failures = dir.join("failures.jsonl");
    if out.failures.is_empty() {
        if failures.exists() {
            fs::remove_file(&failures)?;
        }
    } else {
        write_jsonl(&out.failures, failures)?;
    }
    Ok(())
}
