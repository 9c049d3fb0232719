//! Band-limited rational resampling with a polyphase FIR.

use std::f64::consts::PI;

use crate::audio::Waveform;
use crate::error::{Error, Result};

/// Windowed-sinc resampling to `target_rate`. Output length is
/// `round(len * target / source)`; equal rates return an exact copy.
pub fn resample(w: &Waveform, target_rate: u32) -> Result<Waveform> {
    if target_rate == 0 {
        return Err(Error::InvalidArgument("target rate must be positive".into()));
    }
    let source_rate = w.sample_rate();
    if source_rate == target_rate {
        return Ok(w.clone());
    }
    let g = gcd(source_rate as u64, target_rate as u64);
    let up = target_rate as u64 / g;
    let down = source_rate as u64 / g;
    let taps = lowpass_taps(up, down);
    let out_len = ((w.len() as u128 * target_rate as u128 + source_rate as u128 / 2)
        / source_rate as u128) as usize;
    let y = resample_poly(w.samples(), up as usize, down as usize, &taps, Some(out_len));
    Waveform::new(y, target_rate)
}

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Kaiser (beta 5) windowed sinc with cutoff at the lower of the two
/// Nyquist rates, unit DC gain before the `up` scaling.
fn lowpass_taps(up: u64, down: u64) -> Vec<f64> {
    let max_rate = up.max(down) as f64;
    let cutoff = 1.0 / max_rate;
    let half_len = 10 * up.max(down) as usize;
    let n = 2 * half_len + 1;
    let window = kaiser(n, 5.0);
    let mut h: Vec<f64> = (0..n)
        .map(|i| cutoff * sinc(cutoff * (i as f64 - half_len as f64)) * window[i])
        .collect();
    let sum: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v /= sum);
    h
}

/// Anti-aliasing kernel of the Octave-compatible `resample`, as used by
/// the reference intelligibility implementation. Normalized to unit sum.
pub(crate) fn octave_kernel(p: u64, q: u64) -> Vec<f64> {
    let g = gcd(p, q);
    let (p, q) = ((p / g) as f64, (q / g) as f64);
    let rejection_db = 60.0;
    let stopband_cutoff = 1.0 / (2.0 * p.max(q));
    let roll_off_width = stopband_cutoff / 10.0;
    let half = ((rejection_db - 8.0) / (28.714 * roll_off_width)).ceil() as i64;
    let beta = 0.1102 * (rejection_db - 8.7);
    let window = kaiser((2 * half + 1) as usize, beta);
    let mut h: Vec<f64> = (-half..=half)
        .zip(window)
        .map(|(t, w)| w * 2.0 * p * stopband_cutoff * sinc(2.0 * stopband_cutoff * t as f64))
        .collect();
    let sum: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v /= sum);
    h
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

pub(crate) fn kaiser(n: usize, beta: f64) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let denom = bessel_i0(beta);
    (0..n)
        .map(|i| {
            let r = 2.0 * i as f64 / (n - 1) as f64 - 1.0;
            bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / denom
        })
        .collect()
}

fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..500 {
        term *= q / (k as f64 * k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Upsample by `up`, filter with `taps * up`, downsample by `down`, with the
/// output phase centered on the filter (zero-padded edges). Default output
/// length is `ceil(n * up / down)`.
pub(crate) fn resample_poly(
    x: &[f64],
    up: usize,
    down: usize,
    taps: &[f64],
    out_len: Option<usize>,
) -> Vec<f64> {
    let n_in = x.len();
    let default_len = (n_in * up).div_ceil(down);
    let n_out = out_len.unwrap_or(default_len);
    if n_in == 0 {
        return vec![0.0; n_out];
    }
    let half_len = (taps.len() - 1) / 2;
    let pre_pad = down - half_len % down;
    let pre_remove = (half_len + pre_pad) / down;
    let len_h = taps.len() as i64;
    let (up_i, down_i, pre_pad_i) = (up as i64, down as i64, pre_pad as i64);
    let scale = up as f64;

    (0..n_out)
        .map(|i| {
            let m = (i + pre_remove) as i64;
            let base = m * down_i - pre_pad_i;
            // taps index j = base - n*up must lie in [0, len_h)
            let n_hi = base.div_euclid(up_i).min(n_in as i64 - 1);
            let n_lo = (base - len_h + 1 + up_i - 1).div_euclid(up_i).max(0);
            let mut acc = 0.0;
            let mut n = n_lo;
            while n <= n_hi {
                acc += x[n as usize] * taps[(base - n * up_i) as usize];
                n += 1;
            }
            acc * scale
        })
        .collect()
}
