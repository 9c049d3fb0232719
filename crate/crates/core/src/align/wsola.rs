use serde::{Deserialize, Serialize};

use crate::audio::Waveform;
use crate::error::{Error, Result};
use crate::spectral::hann_periodic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WsolaConfig {
    pub frame_len: usize,
    pub synthesis_hop: usize,
    /// Half-width of the offset search, in samples.
    pub tolerance: usize,
}

impl Default for WsolaConfig {
    fn default() -> Self {
        Self::for_rate(16000)
    }
}

impl WsolaConfig {
    /// 25 ms frames, 12.5 ms synthesis hop, 10 ms search tolerance.
    pub fn for_rate(rate: u32) -> Self {
        let ms = |v: f64| (v * rate as f64 / 1000.0).round() as usize;
        Self {
            frame_len: ms(25.0),
            synthesis_hop: ms(12.5),
            tolerance: ms(10.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.synthesis_hop == 0 || self.frame_len <= self.synthesis_hop {
            return Err(Error::InvalidArgument(format!(
                "wsola needs frame_len > synthesis_hop > 0 (got {} / {})",
                self.frame_len, self.synthesis_hop
            )));
        }
        Ok(())
    }
}

fn similarity(a: &[f64], b: &[f64]) -> f64 {
    let (mut dot, mut ea, mut eb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        ea += x * x;
        eb += y * y;
    }
    let denom = (ea * eb).sqrt();
    if denom > 0.0 {
        dot / denom
    } else {
        0.0
    }
}

/// Time-scale `w` to exactly `target_len` samples without changing pitch.
/// Each Hann-windowed analysis frame is shifted within `±tolerance` of its
/// nominal position to best match the natural continuation of the previous
/// frame, then overlap-added at the synthesis hop.
pub fn wsola_stretch(w: &Waveform, target_len: usize, cfg: &WsolaConfig) -> Result<Waveform> {
    cfg.validate()?;
    if w.is_empty() {
        return Err(Error::EmptySequence);
    }
    let (n, hs, tol) = (cfg.frame_len, cfg.synthesis_hop, cfg.tolerance);
    if target_len < n {
        return Err(Error::TooShort {
            len: target_len,
            window: n,
        });
    }
    let half = n / 2;
    let analysis_hop = hs as f64 * w.len() as f64 / target_len as f64;

    // input sample t lives at xp[tol + half + t]
    let lead = tol + half;
    let mut xp = vec![0.0; lead];
    xp.extend_from_slice(w.samples());
    xp.resize(xp.len() + half + tol + n + hs, 0.0);

    let window = hann_periodic(n);
    let out_span = target_len + n + hs;
    let mut acc = vec![0.0; out_span];
    let mut norm = vec![0.0; out_span];

    let mut prev: Option<usize> = None;
    let mut k = 0usize;
    while k * hs < target_len + half {
        let nominal = (tol + (k as f64 * analysis_hop).round() as usize).min(xp.len() - n);
        let pos = match prev {
            None => nominal,
            Some(p) => {
                let natural = (p + hs).min(xp.len() - n);
                let template = &xp[natural..natural + n];
                let lo = nominal.saturating_sub(tol);
                let hi = (nominal + tol).min(xp.len() - n);
                let mut best = (nominal.min(hi), f64::NEG_INFINITY);
                // nearest offsets first so ties stay close to the nominal position
                for d in 0..=tol {
                    for cand in [nominal.checked_sub(d), nominal.checked_add(d)] {
                        let Some(c) = cand else { continue };
                        if c < lo || c > hi || (d == 0 && best.1 > f64::NEG_INFINITY) {
                            continue;
                        }
                        let s = similarity(template, &xp[c..c + n]);
                        if s > best.1 + 1e-12 {
                            best = (c, s);
                        }
                    }
                }
                best.0
            }
        };
        let start = k * hs;
        if start + n > out_span {
            break;
        }
        for i in 0..n {
            acc[start + i] += window[i] * xp[pos + i];
            norm[start + i] += window[i];
        }
        prev = Some(pos);
        k += 1;
    }

    let out = (0..target_len)
        .map(|t| {
            let (a, z) = (acc[t + half], norm[t + half]);
            if z > 1e-9 {
                a / z
            } else {
                0.0
            }
        })
        .collect();
    Waveform::new(out, w.sample_rate())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::peak_frequency;
    use std::f64::consts::PI;

    fn tone(n: usize) -> Waveform {
        Waveform::new(
            (0..n)
                .map(|i| 0.5 * (2.0 * PI * 440.0 * i as f64 / 16000.0).sin())
                .collect(),
            16000,
        )
        .unwrap()
    }

    #[test]
    fn unit_rate_reconstructs_input() {
        let x: Vec<f64> = (0..4000u64)
            .map(|i| ((i * 2654435761) % 1000) as f64 / 1000.0 - 0.5)
            .collect();
        let w = Waveform::new(x, 16000).unwrap();
        let y = wsola_stretch(&w, 4000, &WsolaConfig::default()).unwrap();
        let rms = (w
            .samples()
            .iter()
            .zip(y.samples())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            / 4000.0)
            .sqrt();
        assert!(rms <= 1e-3, "rms {rms}");
    }

    #[test]
    fn pitch_preserved_when_stretching() {
        let w = tone(16000);
        let bin = 16000.0 / 1024.0;
        for target in [8000, 16000, 32000] {
            let y = wsola_stretch(&w, target, &WsolaConfig::default()).unwrap();
            assert_eq!(y.len(), target);
            let f = peak_frequency(y.samples(), 16000);
            assert!((f - 440.0).abs() <= bin, "target {target}: {f}");
        }
    }

    #[test]
    fn rejects_short_target() {
        let w = tone(1000);
        assert!(matches!(
            wsola_stretch(&w, 399, &WsolaConfig::default()),
            Err(Error::TooShort { .. })
        ));
        let empty = Waveform::new(vec![], 16000).unwrap();
        assert!(wsola_stretch(&empty, 1000, &WsolaConfig::default()).is_err());
    }

    #[test]
    fn default_parameters() {
        let c = WsolaConfig::default();
        assert_eq!((c.frame_len, c.synthesis_hop, c.tolerance), (400, 200, 160));
    }
}
