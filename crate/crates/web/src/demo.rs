//! Plain-Rust bodies of the browser exports, testable natively.

use inpaint_core::align::{wsola_stretch, WsolaConfig};
use inpaint_core::audio::Waveform;
use inpaint_core::inpaint::{
    apply_corruption, run_informed, GriffinLimDecoder, InpaintDeps, InpaintOptions, MaskSpec,
    Method,
};
use inpaint_core::metrics::{eval_window, stoi};
use inpaint_core::noise::{mix_noise_at_snr, NoiseSource};
use inpaint_core::spectral::{peak_frequency, GriffinLimConfig};
use inpaint_core::synth::{vowel_utterance, UtteranceSpec};

pub const RATE: u32 = 16000;

type Result<T> = std::result::Result<T, String>;

fn wave(samples: &[f32]) -> Result<Waveform> {
    Waveform::new(samples.iter().map(|&v| f64::from(v)).collect(), RATE).map_err(|e| e.to_string())
}

fn to_f32(w: &Waveform) -> Vec<f32> {
    w.samples().iter().map(|&v| v as f32).collect()
}

pub fn synth_utterance(seed: u32) -> Vec<f32> {
    to_f32(&vowel_utterance(&UtteranceSpec::default(), u64::from(seed)))
}

/// Mask of `mask_ms` whose centre sits at `position` (0..1) of the signal.
pub fn centred_mask(len: usize, mask_ms: u32, position: f64) -> Result<MaskSpec> {
    let width = (mask_ms as usize * RATE as usize / 1000).max(1);
    if width >= len {
        return Err(format!("a {mask_ms} ms mask does not fit in {len} samples"));
    }
    let centre = (position.clamp(0.0, 1.0) * len as f64) as usize;
    let t1 = centre.saturating_sub(width / 2).min(len - width);
    MaskSpec::with_len(t1, width).map_err(|e| e.to_string())
}

#[derive(Debug, Clone)]
pub struct InpaintDemo {
    pub corrupted: Vec<f32>,
    pub inpainted: Vec<f32>,
    pub t1: usize,
    pub t2: usize,
    pub stoi_zero_fill: f64,
    pub stoi_inpainted: f64,
}

/// Zero a mask, refill it by mel interpolation and score both against
/// the original over a one-second window.
pub fn inpaint_li(samples: &[f32], mask_ms: u32, position: f64, gl_iters: usize) -> Result<InpaintDemo> {
    let original = wave(samples)?;
    let mask = centred_mask(original.len(), mask_ms, position)?;
    let opts = InpaintOptions::default();
    let decoder = GriffinLimDecoder::new(
        &opts.mel,
        GriffinLimConfig {
            iters: gl_iters.max(1),
            ..Default::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let deps = InpaintDeps {
        decoder: Some(&decoder),
        ..Default::default()
    };
    let corrupted = apply_corruption(&original, &mask).map_err(|e| e.to_string())?;
    let inpainted = run_informed(&original, Some(&mask), Method::Li, &deps, &opts)
        .map_err(|e| e.to_string())?
        .waveform;
    let win = eval_window(&mask, original.len(), RATE).map_err(|e| e.to_string())?;
    let score = |w: &Waveform| -> Result<f64> {
        let r = win.cut(&original).map_err(|e| e.to_string())?;
        let d = win.cut(w).map_err(|e| e.to_string())?;
        Ok(stoi(&r, &d).map_err(|e| e.to_string())?.value)
    };
    Ok(InpaintDemo {
        stoi_zero_fill: score(&corrupted)?,
        stoi_inpainted: score(&inpainted)?,
        corrupted: to_f32(&corrupted),
        inpainted: to_f32(&inpainted),
        t1: mask.t1,
        t2: mask.t2,
    })
}

/// Noisy copy at `snr_db` and its STOI against the clean signal.
pub fn noisy_stoi(samples: &[f32], snr_db: f64, seed: u32) -> Result<(Vec<f32>, f64)> {
    let clean = wave(samples)?;
    let noisy = mix_noise_at_snr(&clean, &NoiseSource::White, snr_db, u64::from(seed)).map_err(|e| e.to_string())?;
    let s = stoi(&clean, &noisy).map_err(|e| e.to_string())?.value;
    Ok((to_f32(&noisy), s))
}

/// Time-scale by `factor` (output length over input length).
pub fn stretch(samples: &[f32], factor: f64) -> Result<Vec<f32>> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(format!("stretch factor {factor}"));
    }
    let w = wave(samples)?;
    let target = (w.len() as f64 * factor).round() as usize;
    let y = wsola_stretch(&w, target, &WsolaConfig::for_rate(RATE)).map_err(|e| e.to_string())?;
    Ok(to_f32(&y))
}

pub fn tone(freq: f64, secs: f64) -> Vec<f32> {
    let n = (secs * RATE as f64) as usize;
    (0..n)
        .map(|i| (0.5 * (2.0 * std::f64::consts::PI * freq * i as f64 / RATE as f64).sin()) as f32)
        .collect()
}

pub fn peak_hz(samples: &[f32]) -> f64 {
    let x: Vec<f64> = samples.iter().map(|&v| f64::from(v)).collect();
    peak_frequency(&x, RATE)
}
