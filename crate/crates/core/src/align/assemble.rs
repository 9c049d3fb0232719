use crate::align::{dtw_align_banded, map_interval, wsola_stretch, WsolaConfig};
use crate::audio::Waveform;
use crate::error::{Error, Result};
use crate::inpaint::{fade_samples, samples_to_frames, stitch_crossfade, FrameInterval, MaskSpec};
use crate::resample::resample;
use crate::spectral::{MelAnalyzer, MelConfig};

#[derive(Debug, Clone)]
pub struct AsrTtsOptions {
    pub mel: MelConfig,
    pub wsola: WsolaConfig,
    pub fade_secs: f64,
    pub dtw_band: Option<usize>,
}

impl Default for AsrTtsOptions {
    fn default() -> Self {
        Self {
            mel: MelConfig::default(),
            wsola: WsolaConfig::default(),
            fade_secs: crate::inpaint::DEFAULT_FADE_SECS,
            dtw_band: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AsrTtsAssembly {
    pub waveform: Waveform,
    /// Mask frames in the original and their aligned frames in the
    /// synthetic rendering.
    pub source_frames: FrameInterval,
    pub mapped_frames: FrameInterval,
    /// Inclusive synthetic sample span matched to `[t1, t2]`.
    pub synthetic_span: (usize, usize),
    /// Samples of stretched synthetic audio occupying the mask proper.
    pub inserted_len: usize,
}

/// Align a synthetic rendering of the utterance with the masked original,
/// cut the synthetic segment matched to the mask, time-scale it to the mask
/// duration and cross-fade it in.
pub fn assemble_asr_tts(
    original: &Waveform,
    synthetic: &Waveform,
    mask: &MaskSpec,
    opts: &AsrTtsOptions,
) -> Result<AsrTtsAssembly> {
    let rate = original.sample_rate();
    if opts.mel.sample_rate != rate {
        return Err(Error::RateMismatch(rate, opts.mel.sample_rate));
    }
    mask.check_within(original.len())?;
    let synthetic = resample(synthetic, rate)?;
    let analyzer = MelAnalyzer::new(&opts.mel)?;
    let mel_orig = analyzer.analyze(original)?;
    let mel_syn = analyzer.analyze(&synthetic)?;
    let path = dtw_align_banded(&mel_orig, &mel_syn, opts.dtw_band)?;

    let geom = mel_orig.geometry();
    let hop = geom.hop_samples;
    let source_frames = samples_to_frames(mask, &geom, original.len())?;
    let mapped_frames = map_interval(&path, source_frames)?;

    // keep the mask's offset within its first/last frame
    let s1 = mapped_frames.first * hop + (mask.t1 - source_frames.first * hop);
    let s2 = (mapped_frames.last * hop + mask.t2.saturating_sub(source_frames.last * hop))
        .min(synthetic.len() - 1);
    if s1 > s2 || s2 - s1 + 1 < opts.wsola.frame_len {
        return Err(Error::AlignmentCollapse(s2.saturating_sub(s1) + 1));
    }

    let fade = fade_samples(opts.fade_secs, rate);
    let cut: Vec<f64> = (s1 as i64 - fade as i64..=(s2 + fade) as i64)
        .map(|i| {
            usize::try_from(i)
                .ok()
                .and_then(|i| synthetic.samples().get(i).copied())
                .unwrap_or(0.0)
        })
        .collect();
    let cut = Waveform::new(cut, rate)?;
    let inserted_len = mask.len();
    let stretched = wsola_stretch(&cut, inserted_len + 2 * fade, &opts.wsola)?;

    // stretched[fade] lands on t1
    let (offset, generated) = if mask.t1 >= fade {
        (mask.t1 - fade, stretched)
    } else {
        let drop = fade - mask.t1;
        (0, stretched.slice(drop, stretched.len())?)
    };
    let waveform = stitch_crossfade(original, &generated, offset, mask, opts.fade_secs)?;
    Ok(AsrTtsAssembly {
        waveform,
        source_frames,
        mapped_frames,
        synthetic_span: (s1, s2),
        inserted_len,
    })
}
