use std::ops::Range;

use crate::error::{Error, Result};
use crate::inpaint::FrameGeometry;

/// Frame-rate feature matrix (`L x D`, row-major) with the frame geometry
/// that produced it. Holds encoder outputs and log-mel sequences alike.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSequence {
    data: Vec<f64>,
    dim: usize,
    hop_samples: usize,
    win_samples: usize,
    sample_rate: u32,
}

impl EmbeddingSequence {
    pub fn new(
        data: Vec<f64>,
        dim: usize,
        hop_samples: usize,
        win_samples: usize,
        sample_rate: u32,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("embedding dim must be at least 1".into()));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::InvalidArgument(format!(
                "{} values do not form rows of {dim}",
                data.len()
            )));
        }
        if hop_samples == 0 || win_samples < hop_samples {
            return Err(Error::InvalidArgument(format!(
                "bad frame geometry win {win_samples} hop {hop_samples}"
            )));
        }
        if sample_rate == 0 {
            return Err(Error::InvalidArgument("sample rate must be positive".into()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("embedding sequence"));
        }
        Ok(Self {
            data,
            dim,
            hop_samples,
            win_samples,
            sample_rate,
        })
    }

    pub(crate) fn from_parts(
        data: Vec<f64>,
        dim: usize,
        hop_samples: usize,
        win_samples: usize,
        sample_rate: u32,
    ) -> Self {
        debug_assert!(data.len().is_multiple_of(dim));
        Self {
            data,
            dim,
            hop_samples,
            win_samples,
            sample_rate,
        }
    }

    pub fn from_rows(rows: &[Vec<f64>], geometry: FrameGeometry) -> Result<Self> {
        let dim = rows.first().map(Vec::len).ok_or(Error::EmptySequence)?;
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.len(),
            });
        }
        Self::new(
            rows.concat(),
            dim,
            geometry.hop_samples,
            geometry.win_samples,
            geometry.sample_rate,
        )
    }

    /// Same geometry, new contents.
    pub fn with_data(&self, data: Vec<f64>, dim: usize) -> Result<Self> {
        Self::new(data, dim, self.hop_samples, self.win_samples, self.sample_rate)
    }

    pub fn n_frames(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hop_samples(&self) -> usize {
        self.hop_samples
    }

    pub fn win_samples(&self) -> usize {
        self.win_samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn geometry(&self) -> FrameGeometry {
        FrameGeometry {
            win_samples: self.win_samples,
            hop_samples: self.hop_samples,
            sample_rate: self.sample_rate,
        }
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn frame(&self, l: usize) -> &[f64] {
        &self.data[l * self.dim..(l + 1) * self.dim]
    }

    pub fn frame_mut(&mut self, l: usize) -> &mut [f64] {
        &mut self.data[l * self.dim..(l + 1) * self.dim]
    }

    pub fn frames(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }

    /// Frames in `range`, same geometry.
    pub fn slice_frames(&self, range: Range<usize>) -> Result<Self> {
        if range.start > range.end || range.end > self.n_frames() {
            return Err(Error::InvalidArgument(format!(
                "frame range {range:?} outside {} frames",
                self.n_frames()
            )));
        }
        Ok(Self::from_parts(
            self.data[range.start * self.dim..range.end * self.dim].to_vec(),
            self.dim,
            self.hop_samples,
            self.win_samples,
            self.sample_rate,
        ))
    }

    /// Number of samples spanned by the frames: `(L - 1) * hop + win`.
    pub fn span_samples(&self) -> usize {
        match self.n_frames() {
            0 => 0,
            l => (l - 1) * self.hop_samples + self.win_samples,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_checks() {
        assert!(EmbeddingSequence::new(vec![0.0; 6], 4, 320, 400, 16000).is_err());
        assert!(EmbeddingSequence::new(vec![0.0; 8], 4, 320, 300, 16000).is_err());
        assert!(EmbeddingSequence::new(vec![f64::INFINITY; 4], 4, 320, 400, 16000).is_err());
        let e = EmbeddingSequence::new(vec![0.0; 8], 4, 320, 400, 16000).unwrap();
        assert_eq!(e.n_frames(), 2);
        assert_eq!(e.span_samples(), 720);
    }

    #[test]
    fn slicing_keeps_geometry() {
        let e = EmbeddingSequence::new((0..12).map(f64::from).collect(), 2, 320, 400, 16000)
            .unwrap();
        let s = e.slice_frames(2..4).unwrap();
        assert_eq!(s.data(), &[4.0, 5.0, 6.0, 7.0]);
        assert_eq!(s.geometry(), e.geometry());
        assert!(e.slice_frames(5..7).is_err());
    }
}
