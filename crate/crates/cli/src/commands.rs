use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use log::info;

use inpaint_core::align::{assemble_asr_tts, AsrTtsOptions};
use inpaint_core::audio::{read_wav, wav_info, write_wav, Waveform};
use inpaint_core::formats::{
    mask_to_json, read_codebook, read_mask, read_sief, write_codebook, write_jsonl, write_units,
};
use inpaint_core::harness::{
    draw_mask, gen_masks, run_eval, summary_csv, write_outputs, DecoderKind, EmbedderKind,
    Manifest, NoiseConfig, RunConfig, UttLength,
};
use inpaint_core::inpaint::{
    apply_corruption, run_blind, run_informed, Decoder, EmbeddingSource, ExternalDecoder,
    ExternalEmbedder, GriffinLimDecoder, InpaintDeps, InpaintOptions, MaskSpec, MelEmbedder,
    Mode, PrecomputedEmbeddings,
};
use inpaint_core::metrics::snr_measure;
use inpaint_core::noise::{mix_noise_at_snr, NoiseKind, NoiseSource};
use inpaint_core::quantize::{quantize as quantize_units, train_kmeans, KmeansConfig, Projection};
use inpaint_core::resample::resample;
use inpaint_core::spectral::{GriffinLimConfig, MelAnalyzer, MelConfig};

use crate::{
    AsrTtsArgs, CodebookKindArg, CorruptArgs, EvalArgs, InpaintArgs, MaskArgs, MaskGenArgs,
    NoiseMixArgs, QuantizeArgs, TrainCodebookArgs,
};

/// Exit status of an `eval` run in which some utterances failed.
const PARTIAL_FAILURE: u8 = 2;

fn split_command(cmd: &str) -> Vec<String> {
    cmd.split_whitespace().map(str::to_string).collect()
}

fn load_mask(args: &MaskArgs) -> Result<Option<MaskSpec>> {
    Ok(match (&args.mask, args.t1, args.t2) {
        (Some(p), _, _) => Some(read_mask(p).with_context(|| format!("reading mask {}", p.display()))?),
        (None, Some(t1), Some(t2)) => Some(MaskSpec::new(t1, t2)?),
        _ => None,
    })
}

fn require_mask(args: &MaskArgs) -> Result<MaskSpec> {
    load_mask(args)?.context("a mask is required: pass --mask or --t1/--t2")
}

fn read_at(path: &Path, rate: u32) -> Result<Waveform> {
    let w = read_wav(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(resample(&w, rate)?)
}

fn write_text(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

pub fn mask_gen(a: MaskGenArgs) -> Result<ExitCode> {
    if let Some(wav) = &a.wav {
        let (len, rate) = wav_info(wav)?;
        let key = wav.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let mask = draw_mask(&key, len, rate, a.mask_ms, a.seed, a.margin_ms)?;
        write_text(a.out.as_deref(), &(mask_to_json(&mask) + "\n"))?;
        return Ok(ExitCode::SUCCESS);
    }
    let manifest = Manifest::load(a.manifest.as_ref().expect("clap enforces a source"))?;
    let mut lengths = Vec::with_capacity(manifest.len());
    for e in &manifest.entries {
        let (len, sample_rate) = wav_info(&e.wav_path).with_context(|| format!("utterance {}", e.utt_id))?;
        lengths.push(UttLength {
            utt: e.utt_id.clone(),
            len,
            sample_rate,
        });
    }
    let report = gen_masks(&lengths, a.mask_ms, a.seed, a.margin_ms);
    for (utt, why) in &report.skipped {
        eprintln!("skipped {utt}: {why}");
    }
    match &a.out {
        Some(p) => write_jsonl(&report.masks, p)?,
        None => {
            let mut s = String::new();
            for m in &report.masks {
                s += &serde_json::to_string(m)?;
                s.push('\n');
            }
            write_text(None, &s)?;
        }
    }
    info!("{} masks, {} skipped", report.masks.len(), report.skipped.len());
    Ok(ExitCode::SUCCESS)
}

pub fn corrupt(a: CorruptArgs) -> Result<ExitCode> {
    let w = read_wav(&a.input)?;
    let mask = require_mask(&a.mask)?;
    write_wav(&apply_corruption(&w, &mask)?, &a.out)?;
    Ok(ExitCode::SUCCESS)
}

pub fn train_codebook(a: TrainCodebookArgs) -> Result<ExitCode> {
    let mut data = Vec::new();
    for p in &a.embeddings {
        data.push(read_sief(p).with_context(|| format!("reading {}", p.display()))?);
    }
    if let Some(m) = &a.manifest {
        let manifest = Manifest::load(m)?;
        let mel = MelConfig::default();
        let analyzer = MelAnalyzer::new(&mel)?;
        for e in &manifest.entries {
            let seq = match EmbedderKind::from(a.embedder) {
                EmbedderKind::Mel => analyzer.analyze(&read_at(&e.wav_path, mel.sample_rate)?)?,
                EmbedderKind::Precomputed => {
                    let p = e
                        .embedding_path
                        .as_ref()
                        .with_context(|| format!("{} has no embedding_path", e.utt_id))?;
                    read_sief(p)?
                }
                EmbedderKind::External => bail!("train-codebook embeds with mel or precomputed features only"),
            };
            data.push(seq);
        }
    }
    let cfg = KmeansConfig {
        k: a.k,
        seed: a.seed,
        max_iters: a.max_iters,
        subsample: a.subsample,
        ..Default::default()
    };
    let result = train_kmeans(&data, &cfg)?;
    info!(
        "{} iterations, objective {:?} -> {:?}",
        result.iterations,
        result.objective.first(),
        result.objective.last()
    );
    let cb = match a.kind {
        CodebookKindArg::Euclidean => result.codebook,
        CodebookKindArg::Cosine => {
            let dim = result.codebook.dim();
            result.codebook.into_cosine(Projection::identity(dim), a.temperature)?
        }
    };
    write_codebook(&cb, &a.out)?;
    println!(
        "{{\"k\":{},\"dim\":{},\"iterations\":{},\"objective\":{}}}",
        cb.k(),
        cb.dim(),
        result.iterations,
        result.objective.last().copied().unwrap_or(0.0)
    );
    Ok(ExitCode::SUCCESS)
}

pub fn quantize(a: QuantizeArgs) -> Result<ExitCode> {
    let z = read_sief(&a.embeddings)?;
    let cb = read_codebook(&a.codebook)?;
    let units = quantize_units(&z, &cb)?;
    write_units(&units, &a.out)?;
    Ok(ExitCode::SUCCESS)
}

pub fn inpaint(a: InpaintArgs) -> Result<ExitCode> {
    let opts = InpaintOptions::default();
    let rate = opts.mel.sample_rate;
    let input = read_at(&a.input, rate)?;
    let mask = load_mask(&a.mask)?;
    let gl = GriffinLimConfig {
        seed: a.seed,
        iters: a.gl_iters.unwrap_or(GriffinLimConfig::default().iters),
        ..Default::default()
    };
    let decoder: Box<dyn Decoder> = match DecoderKind::from(a.decoder) {
        DecoderKind::GriffinLim => Box::new(GriffinLimDecoder::new(&opts.mel, gl)?),
        DecoderKind::External => Box::new(ExternalDecoder {
            command: split_command(a.decoder_cmd.as_deref().context("--decoder external needs --decoder-cmd")?),
            codebook_path: a.codebook.clone(),
            sample_rate: rate,
        }),
    };
    let embedder: Box<dyn EmbeddingSource> = match EmbedderKind::from(a.embedder) {
        EmbedderKind::Mel => Box::new(MelEmbedder::new(&opts.mel)?),
        EmbedderKind::Precomputed => Box::new(PrecomputedEmbeddings {
            sequence: read_sief(a.embeddings.as_ref().context("--embedder precomputed needs --embeddings")?)?,
        }),
        EmbedderKind::External => Box::new(ExternalEmbedder {
            command: split_command(a.embedder_cmd.as_deref().context("--embedder external needs --embedder-cmd")?),
            geometry: Default::default(),
        }),
    };
    let codebook = a.codebook.as_ref().map(read_codebook).transpose()?;
    let synthetic = a.synthetic.as_ref().map(read_wav).transpose()?;
    let deps = InpaintDeps {
        decoder: Some(decoder.as_ref()),
        embedder: Some(embedder.as_ref()),
        codebook: codebook.as_ref(),
        synthetic: synthetic.as_ref(),
    };
    let result = match a.mode.into() {
        Mode::Informed => run_informed(&input, mask.as_ref(), a.method.into(), &deps, &opts)?,
        Mode::Blind => {
            let corrupted = match &mask {
                Some(m) => apply_corruption(&input, m)?,
                None => input.clone(),
            };
            run_blind(&corrupted, a.method.into(), &deps)?
        }
    };
    write_wav(&result.waveform, &a.out)?;
    Ok(ExitCode::SUCCESS)
}

pub fn asr_tts_assemble(a: AsrTtsArgs) -> Result<ExitCode> {
    let opts = AsrTtsOptions {
        fade_secs: a.fade_ms / 1000.0,
        dtw_band: a.dtw_band,
        ..Default::default()
    };
    let original = read_at(&a.input, opts.mel.sample_rate)?;
    let synthetic = read_wav(&a.synthetic)?;
    let mask = require_mask(&a.mask)?;
    let r = assemble_asr_tts(&original, &synthetic, &mask, &opts)?;
    write_wav(&r.waveform, &a.out)?;
    println!(
        "{}",
        serde_json::json!({
            "source_frames": [r.source_frames.first, r.source_frames.last],
            "mapped_frames": [r.mapped_frames.first, r.mapped_frames.last],
            "synthetic_span": [r.synthetic_span.0, r.synthetic_span.1],
            "inserted_len": r.inserted_len,
        })
    );
    Ok(ExitCode::SUCCESS)
}

fn eval_config(a: &EvalArgs) -> Result<RunConfig> {
    let mut cfg = match &a.config {
        Some(p) => RunConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => RunConfig::default(),
    };
    if let Some(m) = a.method {
        cfg.method = m.into();
    }
    if let Some(m) = a.mode {
        cfg.mode = m.into();
    }
    if !a.mask_ms.is_empty() {
        cfg.mask_ms = a.mask_ms.clone();
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if a.noise.is_some() || a.snr_db.is_some() || a.noise_path.is_some() {
        let base = cfg.noise.clone();
        let kind: NoiseKind = a
            .noise
            .map(Into::into)
            .or(base.as_ref().map(|n| n.kind))
            .unwrap_or(NoiseKind::White);
        let snr_db = a
            .snr_db
            .or(base.as_ref().map(|n| n.snr_db))
            .context("--noise needs --snr-db")?;
        let path = a.noise_path.clone().or(base.and_then(|n| n.path));
        cfg.noise = Some(NoiseConfig { kind, snr_db, path });
    }
    if let Some(d) = a.decoder {
        cfg.decoder = d.into();
    }
    if let Some(c) = &a.decoder_cmd {
        cfg.external.decoder = split_command(c);
    }
    if let Some(e) = a.embedder {
        cfg.embedder = e.into();
    }
    if let Some(c) = &a.embedder_cmd {
        cfg.external.embedder = split_command(c);
    }
    let set = |slot: &mut Option<PathBuf>, v: &Option<PathBuf>| {
        if v.is_some() {
            slot.clone_from(v);
        }
    };
    set(&mut cfg.codebook, &a.codebook);
    set(&mut cfg.masks, &a.masks);
    set(&mut cfg.hypotheses, &a.hypotheses);
    if let Some(w) = a.workers {
        cfg.workers = w;
    }
    if let Some(d) = &a.out_dir {
        cfg.output_dir = d.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn eval(a: EvalArgs) -> Result<ExitCode> {
    let cfg = eval_config(&a)?;
    let manifest = Manifest::load(&a.manifest)?;
    let out = run_eval(&manifest, &cfg)?;
    write_outputs(&out, &cfg, &cfg.output_dir)?;
    print!("{}", summary_csv(&out.summary)?);
    for (utt, why) in &out.skipped {
        eprintln!("skipped {utt}: {why}");
    }
    for f in &out.failures {
        eprintln!("failed {} ({} ms): {}", f.utt, f.mask_ms, f.error);
    }
    if out.is_partial() {
        eprintln!(
            "{} of {} utterance/mask runs failed; see {}",
            out.failures.len(),
            manifest.len() * cfg.mask_ms.len(),
            cfg.output_dir.join("failures.jsonl").display()
        );
        return Ok(ExitCode::from(PARTIAL_FAILURE));
    }
    Ok(ExitCode::SUCCESS)
}

pub fn noise_mix(a: NoiseMixArgs) -> Result<ExitCode> {
    let clean = read_wav(&a.input)?;
    let source = match NoiseKind::from(a.noise) {
        NoiseKind::White => NoiseSource::White,
        NoiseKind::Crowd => {
            let p = a.noise_path.as_ref().context("--noise crowd needs --noise-path")?;
            NoiseSource::Recording(read_at(p, clean.sample_rate())?)
        }
    };
    let noisy = mix_noise_at_snr(&clean, &source, a.snr_db, a.seed)?;
    let clipped = write_wav(&noisy, &a.out)?;
    if clipped > 0 {
        eprintln!("warning: {clipped} samples clipped on write");
    }
    let measured = snr_measure(&clean, &noisy).map(|s| s.value).unwrap_or(f64::INFINITY);
    println!("{{\"snr_db\":{},\"measured_db\":{measured:.4}}}", a.snr_db);
    Ok(ExitCode::SUCCESS)
}
