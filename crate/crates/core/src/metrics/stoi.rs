//! Short-time objective intelligibility, computed in double precision with
//! the same framing, band matrix and resampler as the widely used Python
//! reference implementation.

use std::sync::OnceLock;

use realfft::RealFftPlanner;

use crate::audio::Waveform;
use crate::error::{Error, Result};
use crate::metrics::{MetricKind, Score};
use crate::resample::{gcd, octave_kernel, resample_poly};

const FS: u32 = 10_000;
const N_FRAME: usize = 256;
const HOP: usize = N_FRAME / 2;
const NFFT: usize = 512;
const NUM_BANDS: usize = 15;
const MIN_FREQ: f64 = 150.0;
const N_SEG: usize = 30;
const BETA_DB: f64 = -15.0;
const DYN_RANGE: f64 = 40.0;
const EPS: f64 = f64::EPSILON;

/// Value returned when fewer than 30 frames survive silence removal.
const TOO_FEW_FRAMES: f64 = 1e-5;

/// Hann window without its zero endpoints: `hanning(n + 2)[1..n + 1]`.
fn inner_hann(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (n + 1) as f64).cos())
        .collect()
}

/// Frame starts `0, hop, ...` strictly below `len - framelen`.
fn frame_starts(len: usize, framelen: usize, hop: usize) -> impl Iterator<Item = usize> {
    (0..len.saturating_sub(framelen)).step_by(hop)
}

/// One-third octave band matrix as `(first_bin, end_bin)` per band.
fn third_octave_bands() -> &'static [(usize, usize); NUM_BANDS] {
    static BANDS: OnceLock<[(usize, usize); NUM_BANDS]> = OnceLock::new();
    BANDS.get_or_init(|| {
        let n_bins = NFFT / 2 + 1;
        let freqs: Vec<f64> = (0..n_bins)
            .map(|i| FS as f64 * i as f64 / NFFT as f64)
            .collect();
        let closest = |target: f64| {
            let mut best = (0, f64::INFINITY);
            for (i, f) in freqs.iter().enumerate() {
                let d = (f - target) * (f - target);
                if d < best.1 {
                    best = (i, d);
                }
            }
            best.0
        };
        let mut bands = [(0, 0); NUM_BANDS];
        for (k, band) in bands.iter_mut().enumerate() {
            let k = k as f64;
            let lo = MIN_FREQ * 2f64.powf((2.0 * k - 1.0) / 6.0);
            let hi = MIN_FREQ * 2f64.powf((2.0 * k + 1.0) / 6.0);
            *band = (closest(lo), closest(hi));
        }
        bands
    })
}

fn to_10k(x: &[f64], rate: u32) -> Vec<f64> {
    if rate == FS {
        return x.to_vec();
    }
    let g = gcd(FS as u64, rate as u64);
    let (up, down) = (FS as u64 / g, rate as u64 / g);
    let taps = octave_kernel(FS as u64, rate as u64);
    resample_poly(x, up as usize, down as usize, &taps, None)
}

/// Drop frames more than 40 dB below the loudest clean frame, then rebuild
/// both signals by overlap-add of the kept windowed frames.
fn remove_silent_frames(x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let w = inner_hann(N_FRAME);
    let starts: Vec<usize> = frame_starts(x.len(), N_FRAME, HOP).collect();
    let energies: Vec<f64> = starts
        .iter()
        .map(|&s| {
            let norm = x[s..s + N_FRAME]
                .iter()
                .zip(&w)
                .map(|(v, h)| (v * h) * (v * h))
                .sum::<f64>()
                .sqrt();
            20.0 * (norm + EPS).log10()
        })
        .collect();
    let max = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let kept: Vec<usize> = starts
        .iter()
        .zip(&energies)
        .filter(|(_, &e)| max - DYN_RANGE - e < 0.0)
        .map(|(&s, _)| s)
        .collect();
    let out_len = kept.len().saturating_sub(1) * HOP + N_FRAME;
    let (mut xs, mut ys) = (vec![0.0; out_len], vec![0.0; out_len]);
    for (f, &s) in kept.iter().enumerate() {
        for i in 0..N_FRAME {
            xs[f * HOP + i] += w[i] * x[s + i];
            ys[f * HOP + i] += w[i] * y[s + i];
        }
    }
    (xs, ys)
}

/// Band envelopes `sqrt(OBM |X|^2)`, one row per band, one column per frame.
fn band_envelopes(x: &[f64]) -> Vec<Vec<f64>> {
    let w = inner_hann(N_FRAME);
    let fft = RealFftPlanner::<f64>::new().plan_fft_forward(NFFT);
    let mut input = fft.make_input_vec();
    let mut spec = fft.make_output_vec();
    let bands = third_octave_bands();
    let mut env = vec![Vec::new(); NUM_BANDS];
    for s in frame_starts(x.len(), N_FRAME, HOP) {
        input.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..N_FRAME {
            input[i] = w[i] * x[s + i];
        }
        fft.process(&mut input, &mut spec).expect("buffer sizes match the plan");
        for (row, &(lo, hi)) in env.iter_mut().zip(bands) {
            let power: f64 = spec[lo..hi].iter().map(|c| c.norm_sqr()).sum();
            row.push(power.sqrt());
        }
    }
    env
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn center_and_scale(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|a| *a -= mean);
    let n = norm(v) + EPS;
    v.iter_mut().for_each(|a| *a /= n);
}

/// Raw intelligibility index in `[-1, 1]` (or the fallback `1e-5`).
pub fn stoi_value(clean: &[f64], degraded: &[f64], rate: u32) -> Result<f64> {
    if clean.len() != degraded.len() {
        return Err(Error::LengthMismatch(clean.len(), degraded.len()));
    }
    if rate == 0 {
        return Err(Error::InvalidArgument("sample rate must be positive".into()));
    }
    if clean.iter().all(|&v| v == 0.0) {
        return Err(Error::SilentSignal);
    }
    let x = to_10k(clean, rate);
    let y = to_10k(degraded, rate);
    if x.len() <= N_FRAME {
        return Err(Error::TooShort {
            len: x.len(),
            window: N_FRAME + 1,
        });
    }
    let (x, y) = remove_silent_frames(&x, &y);
    let x_env = band_envelopes(&x);
    let y_env = band_envelopes(&y);
    let n_frames = x_env[0].len();
    if n_frames < N_SEG {
        log::warn!("only {n_frames} frames after silence removal; returning {TOO_FEW_FRAMES}");
        return Ok(TOO_FEW_FRAMES);
    }
    let clip = 1.0 + 10f64.powf(-BETA_DB / 20.0);
    let mut total = 0.0;
    let mut xs = vec![0.0; N_SEG];
    let mut ys = vec![0.0; N_SEG];
    for m in N_SEG..=n_frames {
        for (xr, yr) in x_env.iter().zip(&y_env) {
            xs.copy_from_slice(&xr[m - N_SEG..m]);
            ys.copy_from_slice(&yr[m - N_SEG..m]);
            let scale = norm(&xs) / (norm(&ys) + EPS);
            for (yv, xv) in ys.iter_mut().zip(&xs) {
                *yv = (*yv * scale).min(xv * clip);
            }
            center_and_scale(&mut ys);
            center_and_scale(&mut xs);
            total += xs.iter().zip(&ys).map(|(a, b)| a * b).sum::<f64>();
        }
    }
    let segments = n_frames - N_SEG + 1;
    Ok(total / (segments * NUM_BANDS) as f64)
}

/// STOI of `degraded` against `clean`, clamped to `[0, 1]`.
pub fn stoi(clean: &Waveform, degraded: &Waveform) -> Result<Score> {
    if clean.sample_rate() != degraded.sample_rate() {
        return Err(Error::RateMismatch(clean.sample_rate(), degraded.sample_rate()));
    }
    let d = stoi_value(clean.samples(), degraded.samples(), clean.sample_rate())?;
    Ok(Score {
        metric: MetricKind::Stoi,
        value: d.clamp(0.0, 1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_edges_match_reference_bins() {
        let b = third_octave_bands();
        // 150 Hz * 2^(-1/6) = 133.6 Hz -> bin 7 (136.7 Hz)
        assert_eq!(b[0], (7, 9));
        assert_eq!(b[14], (174, 219));
        for w in b.windows(2) {
            assert_eq!(w[0].1, w[1].0);
        }
    }

    #[test]
    fn frame_enumeration_excludes_last_full_frame() {
        assert_eq!(frame_starts(512, 256, 128).collect::<Vec<_>>(), vec![0, 128]);
        assert_eq!(frame_starts(513, 256, 128).collect::<Vec<_>>(), vec![0, 128, 256]);
        assert_eq!(frame_starts(200, 256, 128).count(), 0);
    }

    #[test]
    fn rejects_silence_and_mismatch() {
        assert!(matches!(
            stoi_value(&[0.0; 20000], &[0.0; 20000], 10000),
            Err(Error::SilentSignal)
        ));
        assert!(stoi_value(&[1.0; 10], &[1.0; 11], 10000).is_err());
        let a = Waveform::zeros(100, 16000).unwrap();
        let b = Waveform::zeros(100, 8000).unwrap();
        assert!(matches!(stoi(&a, &b), Err(Error::RateMismatch(..))));
    }
}
