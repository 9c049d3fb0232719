use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::audio::Waveform;
use crate::error::{Error, Result};

/// Encoder front-end framing: frame `l` spans samples
/// `[l * hop, l * hop + win)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FrameGeometry {
    pub win_samples: usize,
    pub hop_samples: usize,
    pub sample_rate: u32,
}

impl Default for FrameGeometry {
    /// 25 ms / 20 ms at 16 kHz.
    fn default() -> Self {
        Self {
            win_samples: 400,
            hop_samples: 320,
            sample_rate: 16000,
        }
    }
}

impl FrameGeometry {
    pub fn new(win_samples: usize, hop_samples: usize, sample_rate: u32) -> Result<Self> {
        let g = Self {
            win_samples,
            hop_samples,
            sample_rate,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.hop_samples == 0 || self.win_samples < self.hop_samples || self.sample_rate == 0 {
            return Err(Error::InvalidArgument(format!(
                "frame geometry needs win >= hop >= 1 (win {}, hop {})",
                self.win_samples, self.hop_samples
            )));
        }
        Ok(())
    }

    /// `floor((T - win) / hop) + 1`.
    pub fn n_frames(&self, len: usize) -> Result<usize> {
        if len < self.win_samples {
            return Err(Error::TooShort {
                len,
                window: self.win_samples,
            });
        }
        Ok((len - self.win_samples) / self.hop_samples + 1)
    }

    pub fn frame_span(&self, l: usize) -> Range<usize> {
        let start = l * self.hop_samples;
        start..start + self.win_samples
    }
}

/// Inclusive sample interval `[t1, t2]` of a corrupted segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MaskSpec {
    pub t1: usize,
    pub t2: usize,
}

impl MaskSpec {
    pub fn new(t1: usize, t2: usize) -> Result<Self> {
        if t1 > t2 {
            return Err(Error::InvalidArgument(format!("mask has t1 {t1} > t2 {t2}")));
        }
        Ok(Self { t1, t2 })
    }

    /// Mask of `len` samples starting at `t1`.
    pub fn with_len(t1: usize, len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::InvalidArgument("mask length must be positive".into()));
        }
        Self::new(t1, t1 + len - 1)
    }

    pub fn len(&self) -> usize {
        self.t2 - self.t1 + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn center(&self) -> f64 {
        (self.t1 + self.t2) as f64 / 2.0
    }

    pub fn check_within(&self, len: usize) -> Result<()> {
        if self.t1 > self.t2 || self.t2 >= len {
            return Err(Error::MaskOutOfRange {
                t1: self.t1,
                t2: self.t2,
                len,
            });
        }
        Ok(())
    }

    pub fn frames(&self, geom: &FrameGeometry, len: usize) -> Result<FrameInterval> {
        samples_to_frames(self, geom, len)
    }
}

/// Inclusive frame interval `[first, last]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FrameInterval {
    pub first: usize,
    pub last: usize,
}

impl FrameInterval {
    pub fn range(&self) -> Range<usize> {
        self.first..self.last + 1
    }

    pub fn len(&self) -> usize {
        self.last - self.first + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Frames whose span intersects `[t1, t2]`. Fails when the mask leaves the
/// signal, the signal is shorter than one frame, or the mask lies entirely
/// in the tail past the last full frame.
pub fn samples_to_frames(mask: &MaskSpec, geom: &FrameGeometry, len: usize) -> Result<FrameInterval> {
    geom.validate()?;
    mask.check_within(len)?;
    let n = geom.n_frames(len)?;
    let (win, hop) = (geom.win_samples, geom.hop_samples);
    // l * hop <= t2  and  l * hop + win - 1 >= t1
    let first = (mask.t1 + 1).saturating_sub(win).div_ceil(hop);
    let last = (mask.t2 / hop).min(n - 1);
    if first > last {
        return Err(Error::NoOverlappingFrame {
            t1: mask.t1,
            t2: mask.t2,
        });
    }
    Ok(FrameInterval { first, last })
}

/// Zero the samples of `[t1, t2]`; everything else is copied untouched.
pub fn apply_corruption(w: &Waveform, mask: &MaskSpec) -> Result<Waveform> {
    mask.check_within(w.len())?;
    let mut samples = w.samples().to_vec();
    samples[mask.t1..=mask.t2].iter_mut().for_each(|s| *s = 0.0);
    Waveform::new(samples, w.sample_rate())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(mask: &MaskSpec, g: &FrameGeometry, len: usize) -> Option<(usize, usize)> {
        let n = (len - g.win_samples) / g.hop_samples + 1;
        let hits: Vec<usize> = (0..n)
            .filter(|&l| {
                let s = g.frame_span(l);
                s.start <= mask.t2 && s.end > mask.t1
            })
            .collect();
        Some((*hits.first()?, *hits.last()?))
    }

    #[test]
    fn one_second_has_49_frames() {
        assert_eq!(FrameGeometry::default().n_frames(16000).unwrap(), 49);
    }

    #[test]
    fn two_hundred_ms_mask() {
        let g = FrameGeometry::default();
        let f = samples_to_frames(&MaskSpec::new(3200, 6399).unwrap(), &g, 16000).unwrap();
        assert_eq!((f.first, f.last), (9, 19));
        assert_eq!(brute(&MaskSpec::new(3200, 6399).unwrap(), &g, 16000), Some((9, 19)));
    }

    #[test]
    fn full_cover() {
        let g = FrameGeometry::default();
        let f = samples_to_frames(&MaskSpec::new(0, 15999).unwrap(), &g, 16000).unwrap();
        assert_eq!((f.first, f.last), (0, 48));
    }

    #[test]
    fn tail_only_mask_has_no_frame() {
        let g = FrameGeometry::default();
        let err = samples_to_frames(&MaskSpec::new(15800, 15999).unwrap(), &g, 16000).unwrap_err();
        assert!(matches!(err, Error::NoOverlappingFrame { .. }));
    }

    #[test]
    fn errors() {
        let g = FrameGeometry::default();
        assert!(matches!(
            samples_to_frames(&MaskSpec::new(10, 16000).unwrap(), &g, 16000),
            Err(Error::MaskOutOfRange { .. })
        ));
        assert!(matches!(
            samples_to_frames(&MaskSpec::new(10, 20).unwrap(), &g, 399),
            Err(Error::TooShort { .. })
        ));
        assert!(MaskSpec::new(5, 4).is_err());
    }

    #[test]
    fn corruption_zeroes_only_the_mask() {
        let w = Waveform::new((0..100).map(|i| i as f64 / 100.0).collect(), 16000).unwrap();
        let m = MaskSpec::new(40, 40).unwrap();
        let c = apply_corruption(&w, &m).unwrap();
        assert_eq!(c.samples().iter().filter(|&&v| v == 0.0).count(), 2); // sample 0 was already 0
        assert_eq!(c.samples()[40], 0.0);
        assert_eq!(&c.samples()[..40], &w.samples()[..40]);
        assert_eq!(&c.samples()[41..], &w.samples()[41..]);
        let m = MaskSpec::new(10, 30).unwrap();
        let c = apply_corruption(&w, &m).unwrap();
        assert_eq!(crate::audio::mean_square(&c.samples()[10..=30]), 0.0);
        assert!(apply_corruption(&w, &MaskSpec::new(90, 100).unwrap()).is_err());
    }
}
