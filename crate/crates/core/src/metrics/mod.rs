//! Objective scores and the evaluation window they are computed over.

mod cer;
mod stoi;

use serde::{Deserialize, Serialize};

use crate::audio::{mean_square, Waveform};
use crate::error::{Error, Result};
use crate::inpaint::MaskSpec;

pub use cer::{cer, cer_chars, levenshtein, normalize_text};
pub use stoi::{stoi, stoi_value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Stoi,
    Cer,
    Snr,
    /// Only ever ingested from an external scorer.
    Pesq,
}

impl MetricKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::Stoi => "stoi",
            MetricKind::Cer => "cer",
            MetricKind::Snr => "snr",
            MetricKind::Pesq => "pesq",
        }
    }
}

impl std::fmt::Display for MetricKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stoi" => Ok(MetricKind::Stoi),
            "cer" => Ok(MetricKind::Cer),
            "snr" => Ok(MetricKind::Snr),
            "pesq" => Ok(MetricKind::Pesq),
            other => Err(Error::InvalidArgument(format!("unknown metric {other:?}"))),
        }
    }
}

/// A metric value. STOI lies in `[0, 1]` and CER is non-negative; SNR is
/// `+inf` when the two signals are identical.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub metric: MetricKind,
    pub value: f64,
}

/// Half-open sample span `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalWindow {
    pub start: usize,
    pub end: usize,
}

impl EvalWindow {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.end
    }

    pub fn cut(&self, w: &Waveform) -> Result<Waveform> {
        w.slice(self.start, self.end)
    }
}

/// One second centred on the mask, shifted to lie inside the signal. A
/// signal shorter than a second is used whole.
pub fn eval_window(mask: &MaskSpec, len: usize, rate: u32) -> Result<EvalWindow> {
    mask.check_within(len)?;
    let width = rate as usize;
    if len <= width {
        return Ok(EvalWindow { start: 0, end: len });
    }
    // start = round(center - width / 2), with center = (t1 + t2) / 2
    let twice = (mask.t1 + mask.t2) as i64 - width as i64;
    let start = (twice.div_euclid(2) + twice.rem_euclid(2)).clamp(0, (len - width) as i64) as usize;
    Ok(EvalWindow {
        start,
        end: start + width,
    })
}

/// `10 log10(P_clean / P_residual)` over the whole signal; `+inf` when
/// `noisy == clean`.
pub fn snr_measure(clean: &Waveform, noisy: &Waveform) -> Result<Score> {
    if clean.sample_rate() != noisy.sample_rate() {
        return Err(Error::RateMismatch(clean.sample_rate(), noisy.sample_rate()));
    }
    if clean.len() != noisy.len() {
        return Err(Error::LengthMismatch(clean.len(), noisy.len()));
    }
    let resid: Vec<f64> = noisy
        .samples()
        .iter()
        .zip(clean.samples())
        .map(|(n, c)| n - c)
        .collect();
    let p_resid = mean_square(&resid);
    let value = if p_resid == 0.0 {
        f64::INFINITY
    } else {
        let p_clean = clean.power();
        if p_clean == 0.0 {
            return Err(Error::SilentSignal);
        }
        10.0 * (p_clean / p_resid).log10()
    };
    Ok(Score {
        metric: MetricKind::Snr,
        value,
    })
}
