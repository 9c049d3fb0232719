use std::ops::Range;

use crate::audio::Waveform;
use crate::embedding::EmbeddingSequence;
use crate::error::{Error, Result};
use crate::inpaint::MaskSpec;

pub const DEFAULT_FADE_SECS: f64 = 0.005;

/// Replace the frames in `masked` by a straight line between the last frame
/// before and the first frame after. With only one neighbour available that
/// frame is held constant; an empty range is a no-op.
pub fn interpolate_mel_linear(
    mel: &EmbeddingSequence,
    masked: Range<usize>,
) -> Result<EmbeddingSequence> {
    let n = mel.n_frames();
    if masked.end > n || masked.start > masked.end {
        return Err(Error::InvalidArgument(format!(
            "frame range {masked:?} outside {n} frames"
        )));
    }
    if masked.is_empty() {
        return Ok(mel.clone());
    }
    let left = masked.start.checked_sub(1);
    let right = (masked.end < n).then_some(masked.end);
    let mut out = mel.clone();
    match (left, right) {
        (None, None) => return Err(Error::EntireSequenceMasked),
        (Some(a), None) | (None, Some(a)) => {
            let anchor = mel.frame(a).to_vec();
            for l in masked {
                out.frame_mut(l).copy_from_slice(&anchor);
            }
        }
        (Some(a), Some(b)) => {
            let (fa, fb) = (mel.frame(a), mel.frame(b));
            let span = (b - a) as f64;
            for l in masked {
                let w = (l - a) as f64 / span;
                for ((o, x), y) in out.frame_mut(l).iter_mut().zip(fa).zip(fb) {
                    *o = (1.0 - w) * x + w * y;
                }
            }
        }
    }
    Ok(out)
}

/// Fade length in samples for `fade_secs` at `rate`.
pub fn fade_samples(fade_secs: f64, rate: u32) -> usize {
    (fade_secs * rate as f64).round() as usize
}

/// Insert `generated` (whose sample 0 sits at `offset` in `original`'s
/// timeline) over `mask`, with linear cross-fades of `fade_secs` on both
/// sides. Samples outside `[t1 - F, t2 + F]` are copied from `original`.
pub fn stitch_crossfade(
    original: &Waveform,
    generated: &Waveform,
    offset: usize,
    mask: &MaskSpec,
    fade_secs: f64,
) -> Result<Waveform> {
    if original.sample_rate() != generated.sample_rate() {
        return Err(Error::RateMismatch(
            generated.sample_rate(),
            original.sample_rate(),
        ));
    }
    let len = original.len();
    mask.check_within(len)?;
    let fade = fade_samples(fade_secs, original.sample_rate());
    let start = mask.t1.saturating_sub(fade);
    let end = (mask.t2 + fade).min(len - 1);
    if offset > start || offset + generated.len() <= end {
        return Err(Error::GeneratedTooShort { start, end });
    }
    let gen = |i: usize| generated.samples()[i - offset];
    let mut out = original.samples().to_vec();
    let ramp = (fade + 1) as f64;
    for j in 0..fade {
        if mask.t1 + j < fade {
            continue;
        }
        let i = mask.t1 + j - fade;
        let w = (j + 1) as f64 / ramp;
        out[i] += w * (gen(i) - out[i]);
    }
    for (i, o) in out.iter_mut().enumerate().take(mask.t2 + 1).skip(mask.t1) {
        *o = gen(i);
    }
    for j in 0..fade {
        let i = mask.t2 + 1 + j;
        if i > end {
            break;
        }
        let w = (fade - j) as f64 / ramp;
        out[i] += w * (gen(i) - out[i]);
    }
    Waveform::new(out, original.sample_rate())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inpaint::FrameGeometry;

    fn mel(rows: &[&[f64]]) -> EmbeddingSequence {
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        EmbeddingSequence::from_rows(&rows, FrameGeometry::default()).unwrap()
    }

    #[test]
    fn interpolates_between_anchors() {
        let m = mel(&[&[0.0, 2.0], &[9.0, 9.0], &[9.0, 9.0], &[9.0, 9.0], &[4.0, 6.0]]);
        let out = interpolate_mel_linear(&m, 1..4).unwrap();
        assert_eq!(out.frame(1), &[1.0, 3.0]);
        assert_eq!(out.frame(2), &[2.0, 4.0]);
        assert_eq!(out.frame(3), &[3.0, 5.0]);
        assert_eq!(out.frame(0), m.frame(0));
        assert_eq!(out.frame(4), m.frame(4));
    }

    #[test]
    fn empty_range_is_identity() {
        let m = mel(&[&[1.0], &[2.0]]);
        assert_eq!(interpolate_mel_linear(&m, 1..1).unwrap(), m);
    }

    #[test]
    fn edge_masks_hold_the_anchor() {
        let m = mel(&[&[0.0], &[0.0], &[7.0], &[8.0]]);
        let out = interpolate_mel_linear(&m, 0..2).unwrap();
        assert_eq!(out.data(), &[7.0, 7.0, 7.0, 8.0]);
        let out = interpolate_mel_linear(&m, 2..4).unwrap();
        assert_eq!(out.data(), &[0.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            interpolate_mel_linear(&m, 0..4),
            Err(Error::EntireSequenceMasked)
        ));
    }

    fn wave(f: impl Fn(usize) -> f64, n: usize) -> Waveform {
        Waveform::new((0..n).map(f).collect(), 16000).unwrap()
    }

    #[test]
    fn identical_generation_is_identity() {
        let x = wave(|i| ((i * 31) % 17) as f64 / 17.0 - 0.5, 2000);
        let m = MaskSpec::new(700, 1100).unwrap();
        let out = stitch_crossfade(&x, &x, 0, &m, DEFAULT_FADE_SECS).unwrap();
        assert_eq!(out, x);
    }

    #[test]
    fn fade_midpoint_is_half() {
        // 81-sample fades have an exact middle sample
        let fade = 81.0 / 16000.0;
        let x = wave(|_| 1.0, 2000);
        let g = wave(|_| -1.0, 2000);
        let m = MaskSpec::new(700, 1100).unwrap();
        let out = stitch_crossfade(&x, &g, 0, &m, fade).unwrap();
        assert_eq!(out.samples()[700 - 81 + 40], 0.0);
        assert_eq!(out.samples()[1100 + 1 + 40], 0.0);
        assert_eq!(out.samples()[700], -1.0);
        assert_eq!(out.samples()[700 - 82], 1.0);
        assert_eq!(out.samples()[1100 + 82], 1.0);
    }

    #[test]
    fn offset_segment_and_coverage() {
        let x = wave(|_| 0.5, 2000);
        let g = wave(|_| 0.0, 600);
        let m = MaskSpec::new(700, 1100).unwrap();
        // covers [600, 1200), which includes [620, 1180]
        let out = stitch_crossfade(&x, &g, 600, &m, DEFAULT_FADE_SECS).unwrap();
        assert_eq!(out.samples()[900], 0.0);
        assert!(matches!(
            stitch_crossfade(&x, &g, 650, &m, DEFAULT_FADE_SECS),
            Err(Error::GeneratedTooShort { .. })
        ));
        let other_rate = Waveform::new(vec![0.0; 2000], 8000).unwrap();
        assert!(stitch_crossfade(&x, &other_rate, 0, &m, DEFAULT_FADE_SECS).is_err());
    }

    #[test]
    fn fades_clip_at_signal_edges() {
        let x = wave(|_| 1.0, 500);
        let g = wave(|_| 0.0, 500);
        let m = MaskSpec::new(10, 495).unwrap();
        let out = stitch_crossfade(&x, &g, 0, &m, DEFAULT_FADE_SECS).unwrap();
        assert_eq!(out.len(), 500);
        assert!(out.samples()[0] > 0.0 && out.samples()[0] < 1.0);
    }
}
