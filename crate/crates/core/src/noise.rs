//! Additive noise at a controlled signal-to-noise ratio.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::audio::Waveform;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    White,
    Crowd,
}

/// Where the noise comes from: seeded Gaussian samples, or a recording that
/// is tiled from a seed-determined offset.
#[derive(Debug, Clone)]
pub enum NoiseSource {
    White,
    Recording(Waveform),
}

impl NoiseSource {
    /// Noise of exactly `len` samples at `rate`.
    pub fn render(&self, len: usize, rate: u32, seed: u64) -> Result<Waveform> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match self {
            NoiseSource::White => {
                Waveform::new((0..len).map(|_| rng.sample(StandardNormal)).collect(), rate)
            }
            NoiseSource::Recording(rec) => {
                if rec.sample_rate() != rate {
                    return Err(Error::RateMismatch(rec.sample_rate(), rate));
                }
                if rec.is_empty() {
                    return Err(Error::InvalidArgument("empty noise recording".into()));
                }
                let offset = rng.random_range(0..rec.len());
                let src = rec.samples();
                Waveform::new(
                    (0..len).map(|i| src[(offset + i) % src.len()]).collect(),
                    rate,
                )
            }
        }
    }
}

/// `clean + g * noise` with `g` chosen so that
/// `10 log10(P_clean / P_scaled_noise) == snr_db`, powers as full-signal
/// mean squares. `snr_db == +inf` returns the clean signal unchanged.
pub fn mix_noise_at_snr(
    clean: &Waveform,
    noise: &NoiseSource,
    snr_db: f64,
    seed: u64,
) -> Result<Waveform> {
    if snr_db == f64::INFINITY {
        return Ok(clean.clone());
    }
    if !snr_db.is_finite() {
        return Err(Error::InvalidArgument(format!("snr {snr_db} dB")));
    }
    let p_clean = clean.power();
    if p_clean == 0.0 {
        return Err(Error::SilentSignal);
    }
    let n = noise.render(clean.len(), clean.sample_rate(), seed)?;
    let p_noise = n.power();
    if p_noise == 0.0 {
        return Err(Error::InvalidArgument("noise source is silent".into()));
    }
    let gain = (p_clean / (p_noise * 10f64.powf(snr_db / 10.0))).sqrt();
    Waveform::new(
        clean
            .samples()
            .iter()
            .zip(n.samples())
            .map(|(c, v)| c + gain * v)
            .collect(),
        clean.sample_rate(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::snr_measure;

    fn clean(seed: u64) -> Waveform {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Waveform::new((0..4000).map(|_| rng.random_range(-0.5..0.5)).collect(), 16000).unwrap()
    }

    #[test]
    fn zero_db_means_equal_power() {
        let c = clean(1);
        let m = mix_noise_at_snr(&c, &NoiseSource::White, 0.0, 7).unwrap();
        let resid: Vec<f64> = m.samples().iter().zip(c.samples()).map(|(a, b)| a - b).collect();
        let ratio = c.power() / crate::audio::mean_square(&resid);
        assert!((10.0 * ratio.log10()).abs() < 0.1);
    }

    #[test]
    fn infinite_snr_passthrough() {
        let c = clean(2);
        assert_eq!(mix_noise_at_snr(&c, &NoiseSource::White, f64::INFINITY, 0).unwrap(), c);
    }

    #[test]
    fn crowd_recording_is_tiled_and_seeded() {
        let c = clean(3);
        let rec = Waveform::new((0..1000).map(|i| ((i % 37) as f64 - 18.0) / 40.0).collect(), 16000)
            .unwrap();
        let src = NoiseSource::Recording(rec);
        let a = mix_noise_at_snr(&c, &src, 10.0, 5).unwrap();
        let b = mix_noise_at_snr(&c, &src, 10.0, 5).unwrap();
        assert_eq!(a, b);
        let snr = snr_measure(&c, &a).unwrap().value;
        assert!((snr - 10.0).abs() < 0.1);
    }

    #[test]
    fn errors() {
        let silent = Waveform::zeros(100, 16000).unwrap();
        assert!(matches!(
            mix_noise_at_snr(&silent, &NoiseSource::White, 10.0, 0),
            Err(Error::SilentSignal)
        ));
        let rec = NoiseSource::Recording(Waveform::zeros(100, 8000).unwrap());
        assert!(matches!(
            mix_noise_at_snr(&clean(4), &rec, 10.0, 0),
            Err(Error::RateMismatch(8000, 16000))
        ));
    }
}
