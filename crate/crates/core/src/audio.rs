//! Waveform container and 16-bit PCM WAV I/O.

use std::path::Path;

use log::warn;

use crate::error::{Error, Result};

/// Mono PCM signal with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidArgument("sample rate must be positive".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("waveform"));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn zeros(len: usize, sample_rate: u32) -> Result<Self> {
        Self::new(vec![0.0; len], sample_rate)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Mean square over the full signal.
    pub fn power(&self) -> f64 {
        mean_square(&self.samples)
    }

    /// Copy of samples `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start > end || end > self.len() {
            return Err(Error::InvalidArgument(format!(
                "slice [{start}, {end}) outside {} samples",
                self.len()
            )));
        }
        Ok(Self {
            samples: self.samples[start..end].to_vec(),
            sample_rate: self.sample_rate,
        })
    }

    /// Zero-pad or truncate to exactly `len` samples.
    pub fn fit_to_len(&self, len: usize) -> Self {
        let mut samples = self.samples.clone();
        samples.resize(len, 0.0);
        Self {
            samples,
            sample_rate: self.sample_rate,
        }
    }

    pub fn scaled(&self, gain: f64) -> Result<Self> {
        Self::new(self.samples.iter().map(|s| s * gain).collect(), self.sample_rate)
    }
}

pub(crate) fn mean_square(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

fn open_checked(path: &Path) -> Result<hound::WavReader<std::io::BufReader<std::fs::File>>> {
    if !path.exists() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let reader = hound::WavReader::open(path).map_err(map_hound)?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::NotMono {
            channels: spec.channels,
        });
    }
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(Error::UnsupportedWav(format!(
            "{:?} {}-bit",
            spec.sample_format, spec.bits_per_sample
        )));
    }
    Ok(reader)
}

/// Sample count and rate from the header alone.
pub fn wav_info(path: impl AsRef<Path>) -> Result<(usize, u32)> {
    let reader = open_checked(path.as_ref())?;
    Ok((reader.duration() as usize, reader.spec().sample_rate))
}

/// Reads a RIFF/WAVE file holding 16-bit integer PCM mono audio.
pub fn read_wav(path: impl AsRef<Path>) -> Result<Waveform> {
    let mut reader = open_checked(path.as_ref())?;
    let spec = reader.spec();
    let samples = reader
        .samples::<i16>()
        .map(|s| s.map(|v| f64::from(v) / 32768.0))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(map_hound)?;
    Waveform::new(samples, spec.sample_rate)
}

/// Writes 16-bit PCM mono. Returns the number of samples that lay outside
/// [-1, 1] and were clamped.
pub fn write_wav(w: &Waveform, path: impl AsRef<Path>) -> Result<usize> {
    let path = path.as_ref();
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: w.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let unwritable = |e: hound::Error| match e {
        hound::Error::IoError(source) => Error::Unwritable {
            path: path.to_path_buf(),
            source,
        },
        other => Error::UnsupportedWav(other.to_string()),
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(unwritable)?;
    let mut clamped = 0;
    for &s in &w.samples {
        if !(-1.0..=1.0).contains(&s) {
            clamped += 1;
        }
        writer.write_sample(quantize_i16(s)).map_err(unwritable)?;
    }
    writer.finalize().map_err(unwritable)?;
    if clamped > 0 {
        warn!("{}: clamped {clamped} out-of-range samples", path.display());
    }
    Ok(clamped)
}

pub(crate) fn quantize_i16(s: f64) -> i16 {
    (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16
}

fn map_hound(e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(e) => Error::Io(e),
        hound::Error::FormatError(msg) => Error::UnsupportedWav(msg.to_string()),
        hound::Error::Unsupported => Error::UnsupportedWav("unsupported codec".into()),
        other => Error::UnsupportedWav(other.to_string()),
    }
}
