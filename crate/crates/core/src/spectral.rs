//! STFT and log-mel analysis, and Griffin-Lim decoding of log-mel frames.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use realfft::num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use serde::{Deserialize, Serialize};

use crate::audio::Waveform;
use crate::embedding::EmbeddingSequence;
use crate::error::{Error, Result};

/// Log-mel analysis parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MelConfig {
    pub sample_rate: u32,
    pub n_mels: usize,
    /// Analysis window span in seconds.
    pub window_secs: f64,
    /// Frame step in seconds.
    pub hop_secs: f64,
    pub fft_size: usize,
    pub fmin: f64,
    pub fmax: f64,
    pub log_floor: f64,
}

impl Default for MelConfig {
    fn default() -> Self {
        Self::for_rate(16000)
    }
}

impl MelConfig {
    /// 80 bands, 46 ms window, 20 ms hop, Slaney scale over [0, Nyquist].
    pub fn for_rate(sample_rate: u32) -> Self {
        let window_secs = 0.046;
        let win = (window_secs * sample_rate as f64).round() as usize;
        Self {
            sample_rate,
            n_mels: 80,
            window_secs,
            hop_secs: 0.020,
            fft_size: win.next_power_of_two(),
            fmin: 0.0,
            fmax: sample_rate as f64 / 2.0,
            log_floor: 1e-10,
        }
    }

    pub fn win_samples(&self) -> usize {
        (self.window_secs * self.sample_rate as f64).round() as usize
    }

    pub fn hop_samples(&self) -> usize {
        (self.hop_secs * self.sample_rate as f64).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("mel config: {m}")));
        if self.sample_rate == 0 {
            return bad("sample rate must be positive");
        }
        if self.n_mels == 0 {
            return bad("n_mels must be at least 1");
        }
        let (win, hop) = (self.win_samples(), self.hop_samples());
        if hop == 0 || win < hop {
            return bad("need window >= hop >= 1 sample");
        }
        if self.fft_size < win {
            return bad("fft_size shorter than the window");
        }
        if !(0.0 <= self.fmin && self.fmin < self.fmax && self.fmax <= self.sample_rate as f64 / 2.0)
        {
            return bad("need 0 <= fmin < fmax <= Nyquist");
        }
        if self.log_floor.is_nan() || self.log_floor <= 0.0 {
            return bad("log_floor must be positive");
        }
        Ok(())
    }
}

/// Periodic Hann window.
pub fn hann_periodic(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

fn hz_to_mel_slaney(f: f64) -> f64 {
    let f_sp = 200.0 / 3.0;
    let min_log_hz = 1000.0;
    let min_log_mel = min_log_hz / f_sp;
    let logstep = 6.4f64.ln() / 27.0;
    if f >= min_log_hz {
        min_log_mel + (f / min_log_hz).ln() / logstep
    } else {
        f / f_sp
    }
}

fn mel_to_hz_slaney(m: f64) -> f64 {
    let f_sp = 200.0 / 3.0;
    let min_log_hz = 1000.0;
    let min_log_mel = min_log_hz / f_sp;
    let logstep = 6.4f64.ln() / 27.0;
    if m >= min_log_mel {
        min_log_hz * (logstep * (m - min_log_mel)).exp()
    } else {
        m * f_sp
    }
}

/// Slaney-normalized triangular filters stored sparsely, one row per band.
#[derive(Debug, Clone)]
pub struct MelFilterbank {
    rows: Vec<(usize, Vec<f64>)>,
    centers_hz: Vec<f64>,
    n_bins: usize,
}

impl MelFilterbank {
    pub fn new(cfg: &MelConfig) -> Self {
        let n_bins = cfg.fft_size / 2 + 1;
        let bin_hz: Vec<f64> = (0..n_bins)
            .map(|k| k as f64 * cfg.sample_rate as f64 / cfg.fft_size as f64)
            .collect();
        let (mlo, mhi) = (hz_to_mel_slaney(cfg.fmin), hz_to_mel_slaney(cfg.fmax));
        let hz: Vec<f64> = (0..cfg.n_mels + 2)
            .map(|i| mel_to_hz_slaney(mlo + (mhi - mlo) * i as f64 / (cfg.n_mels + 1) as f64))
            .collect();
        let rows = (0..cfg.n_mels)
            .map(|i| {
                let (lo, mid, hi) = (hz[i], hz[i + 1], hz[i + 2]);
                let enorm = 2.0 / (hi - lo);
                let weights: Vec<(usize, f64)> = bin_hz
                    .iter()
                    .enumerate()
                    .filter_map(|(k, &f)| {
                        let lower = (f - lo) / (mid - lo);
                        let upper = (hi - f) / (hi - mid);
                        let w = lower.min(upper).max(0.0) * enorm;
                        (w > 0.0).then_some((k, w))
                    })
                    .collect();
                match weights.first() {
                    Some(&(start, _)) => {
                        let end = weights.last().unwrap().0;
                        let mut dense = vec![0.0; end - start + 1];
                        for (k, w) in weights {
                            dense[k - start] = w;
                        }
                        (start, dense)
                    }
                    None => (0, Vec::new()),
                }
            })
            .collect();
        Self {
            rows,
            centers_hz: hz[1..=cfg.n_mels].to_vec(),
            n_bins,
        }
    }

    pub fn n_mels(&self) -> usize {
        self.rows.len()
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn centers_hz(&self) -> &[f64] {
        &self.centers_hz
    }

    /// `out[i] = sum_k M[i, k] * power[k]`.
    pub fn apply(&self, power: &[f64], out: &mut [f64]) {
        for (o, (start, w)) in out.iter_mut().zip(&self.rows) {
            *o = w.iter().zip(&power[*start..]).map(|(a, b)| a * b).sum();
        }
    }

    /// `out[k] = sum_i M[i, k] * bands[i]`.
    pub fn apply_transpose(&self, bands: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (b, (start, w)) in bands.iter().zip(&self.rows) {
            for (o, wk) in out[*start..].iter_mut().zip(w) {
                *o += wk * b;
            }
        }
    }

    fn row_sums(&self) -> Vec<f64> {
        self.rows.iter().map(|(_, w)| w.iter().sum()).collect()
    }
}

/// Short-time Fourier transform with a fixed window, hop and FFT size.
/// Frame `l` covers samples `[l * hop, l * hop + win)`.
pub struct Stft {
    window: Vec<f64>,
    hop: usize,
    fft_size: usize,
    forward: Arc<dyn RealToComplex<f64>>,
    inverse: Arc<dyn ComplexToReal<f64>>,
}

impl Stft {
    pub fn new(window: Vec<f64>, hop: usize, fft_size: usize) -> Self {
        let mut planner = RealFftPlanner::<f64>::new();
        Self {
            window,
            hop,
            fft_size,
            forward: planner.plan_fft_forward(fft_size),
            inverse: planner.plan_fft_inverse(fft_size),
        }
    }

    pub fn win(&self) -> usize {
        self.window.len()
    }

    pub fn n_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    pub fn n_frames(&self, len: usize) -> usize {
        if len < self.win() {
            0
        } else {
            (len - self.win()) / self.hop + 1
        }
    }

    /// Complex spectra of every full frame.
    pub fn analyze(&self, x: &[f64]) -> Vec<Vec<Complex64>> {
        let mut buf = self.forward.make_input_vec();
        let mut scratch = self.forward.make_scratch_vec();
        (0..self.n_frames(x.len()))
            .map(|l| {
                let start = l * self.hop;
                buf.iter_mut().for_each(|v| *v = 0.0);
                for (b, (s, w)) in buf.iter_mut().zip(x[start..].iter().zip(&self.window)) {
                    *b = s * w;
                }
                let mut spec = self.forward.make_output_vec();
                self.forward
                    .process_with_scratch(&mut buf, &mut spec, &mut scratch)
                    .expect("fft sizes are fixed at construction");
                spec
            })
            .collect()
    }

    /// Weighted overlap-add inverse; output length `(L - 1) * hop + win`.
    pub fn synthesize(&self, frames: &[Vec<Complex64>]) -> Vec<f64> {
        if frames.is_empty() {
            return Vec::new();
        }
        let win = self.win();
        let len = (frames.len() - 1) * self.hop + win;
        let mut out = vec![0.0; len];
        let mut norm = vec![0.0; len];
        let mut spec = self.inverse.make_input_vec();
        let mut buf = self.inverse.make_output_vec();
        let mut scratch = self.inverse.make_scratch_vec();
        let scale = 1.0 / self.fft_size as f64;
        for (l, frame) in frames.iter().enumerate() {
            spec.copy_from_slice(frame);
            // a real signal needs real DC and Nyquist bins
            spec[0].im = 0.0;
            let last = spec.len() - 1;
            spec[last].im = 0.0;
            self.inverse
                .process_with_scratch(&mut spec, &mut buf, &mut scratch)
                .expect("fft sizes are fixed at construction");
            let start = l * self.hop;
            for i in 0..win {
                let w = self.window[i];
                out[start + i] += buf[i] * scale * w;
                norm[start + i] += w * w;
            }
        }
        let tiny = 1e-8;
        for (o, n) in out.iter_mut().zip(&norm) {
            if *n > tiny {
                *o /= n;
            } else {
                *o = 0.0;
            }
        }
        out
    }
}

/// Cached analysis state for repeated log-mel extraction.
pub struct MelAnalyzer {
    cfg: MelConfig,
    stft: Stft,
    bank: MelFilterbank,
}

impl MelAnalyzer {
    pub fn new(cfg: &MelConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg: cfg.clone(),
            stft: Stft::new(hann_periodic(cfg.win_samples()), cfg.hop_samples(), cfg.fft_size),
            bank: MelFilterbank::new(cfg),
        })
    }

    pub fn config(&self) -> &MelConfig {
        &self.cfg
    }

    pub fn filterbank(&self) -> &MelFilterbank {
        &self.bank
    }

    pub fn analyze(&self, w: &Waveform) -> Result<EmbeddingSequence> {
        if w.sample_rate() != self.cfg.sample_rate {
            return Err(Error::RateMismatch(w.sample_rate(), self.cfg.sample_rate));
        }
        let win = self.cfg.win_samples();
        if w.len() < win {
            return Err(Error::TooShort {
                len: w.len(),
                window: win,
            });
        }
        Ok(self.log_mel_of(w.samples()))
    }

    fn log_mel_of(&self, x: &[f64]) -> EmbeddingSequence {
        let spectra = self.stft.analyze(x);
        let n_mels = self.cfg.n_mels;
        let mut data = Vec::with_capacity(spectra.len() * n_mels);
        let mut power = vec![0.0; self.stft.n_bins()];
        let mut bands = vec![0.0; n_mels];
        for spec in &spectra {
            for (p, c) in power.iter_mut().zip(spec) {
                *p = c.norm_sqr();
            }
            self.bank.apply(&power, &mut bands);
            data.extend(bands.iter().map(|e| e.max(self.cfg.log_floor).ln()));
        }
        EmbeddingSequence::from_parts(
            data,
            n_mels,
            self.cfg.hop_samples(),
            self.cfg.win_samples(),
            self.cfg.sample_rate,
        )
    }
}

/// Log-mel spectrogram; `floor((T - win) / hop) + 1` frames of
/// `ln(max(mel_energy, log_floor))`.
pub fn mel_spectrogram(w: &Waveform, cfg: &MelConfig) -> Result<EmbeddingSequence> {
    MelAnalyzer::new(cfg)?.analyze(w)
}

/// Griffin-Lim settings. `momentum` is the fast Griffin-Lim acceleration
/// term; `seed` fixes the initial random phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GriffinLimConfig {
    pub iters: usize,
    pub momentum: f64,
    pub seed: u64,
    pub nnls_iters: usize,
}

impl Default for GriffinLimConfig {
    fn default() -> Self {
        Self {
            iters: 60,
            momentum: 0.99,
            seed: 0,
            nnls_iters: 150,
        }
    }
}

/// Mel-to-waveform decoder: per-frame non-negative least squares from
/// mel energies to a power spectrum, then iterative phase estimation.
pub struct GriffinLim {
    analyzer: MelAnalyzer,
    gl: GriffinLimConfig,
    lipschitz: f64,
    row_sums: Vec<f64>,
    col_sums: Vec<f64>,
}

impl GriffinLim {
    pub fn new(cfg: &MelConfig, gl: GriffinLimConfig) -> Result<Self> {
        if gl.iters == 0 {
            return Err(Error::InvalidArgument("griffin-lim needs at least one iteration".into()));
        }
        let analyzer = MelAnalyzer::new(cfg)?;
        let bank = analyzer.filterbank();
        let row_sums = bank.row_sums();
        let mut ones = vec![0.0; bank.n_bins()];
        bank.apply_transpose(&vec![1.0; bank.n_mels()], &mut ones);
        let lipschitz = gram_norm(bank);
        Ok(Self {
            analyzer,
            gl,
            lipschitz,
            row_sums,
            col_sums: ones,
        })
    }

    pub fn config(&self) -> &MelConfig {
        self.analyzer.config()
    }

    /// Power spectrum minimizing `||M p - e||^2` subject to `p >= 0`,
    /// by accelerated projected gradient.
    fn nnls_frame(&self, energies: &[f64]) -> Vec<f64> {
        let bank = self.analyzer.filterbank();
        let n = bank.n_bins();
        let mut per_band = vec![0.0; energies.len()];
        for ((pb, e), s) in per_band.iter_mut().zip(energies).zip(&self.row_sums) {
            *pb = if *s > 0.0 { e / s } else { 0.0 };
        }
        let mut p = vec![0.0; n];
        bank.apply_transpose(&per_band, &mut p);
        for (v, c) in p.iter_mut().zip(&self.col_sums) {
            *v = if *c > 0.0 { *v / c } else { 0.0 };
        }
        let step = 1.0 / self.lipschitz;
        let mut y = p.clone();
        let mut prev = p.clone();
        let mut t = 1.0f64;
        let mut resid = vec![0.0; energies.len()];
        let mut grad = vec![0.0; n];
        for _ in 0..self.gl.nnls_iters {
            bank.apply(&y, &mut resid);
            resid.iter_mut().zip(energies).for_each(|(r, e)| *r -= e);
            bank.apply_transpose(&resid, &mut grad);
            prev.copy_from_slice(&p);
            for ((pk, yk), gk) in p.iter_mut().zip(&y).zip(&grad) {
                *pk = (yk - step * gk).max(0.0);
            }
            let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
            let beta = (t - 1.0) / t_next;
            for ((yk, pk), qk) in y.iter_mut().zip(&p).zip(&prev) {
                *yk = (pk + beta * (pk - qk)).max(0.0);
            }
            t = t_next;
        }
        p
    }

    /// Linear magnitudes recovered from log-mel frames.
    pub fn magnitudes(&self, mel: &EmbeddingSequence) -> Result<Vec<Vec<f64>>> {
        let cfg = self.analyzer.config();
        if mel.dim() != cfg.n_mels {
            return Err(Error::DimensionMismatch {
                expected: cfg.n_mels,
                found: mel.dim(),
            });
        }
        Ok(mel
            .frames()
            .map(|f| {
                let e: Vec<f64> = f.iter().map(|v| v.exp()).collect();
                self.nnls_frame(&e).into_iter().map(f64::sqrt).collect()
            })
            .collect())
    }

    pub fn decode(&self, mel: &EmbeddingSequence) -> Result<Waveform> {
        self.decode_with_iters(mel, self.gl.iters)
    }

    pub fn decode_with_iters(&self, mel: &EmbeddingSequence, iters: usize) -> Result<Waveform> {
        let cfg = self.analyzer.config();
        if iters == 0 {
            return Err(Error::InvalidArgument("griffin-lim needs at least one iteration".into()));
        }
        let mags = self.magnitudes(mel)?;
        if mags.is_empty() {
            return Waveform::new(Vec::new(), cfg.sample_rate);
        }
        let stft = &self.analyzer.stft;
        let mut rng = ChaCha8Rng::seed_from_u64(self.gl.seed);
        let mut angles: Vec<Vec<Complex64>> = mags
            .iter()
            .map(|m| {
                m.iter()
                    .map(|_| Complex64::from_polar(1.0, 2.0 * PI * rng.random::<f64>()))
                    .collect()
            })
            .collect();
        let mut rebuilt: Vec<Vec<Complex64>> = mags
            .iter()
            .map(|m| vec![Complex64::new(0.0, 0.0); m.len()])
            .collect();
        let alpha = self.gl.momentum / (1.0 + self.gl.momentum);
        let apply = |angles: &[Vec<Complex64>]| -> Vec<Vec<Complex64>> {
            angles
                .iter()
                .zip(&mags)
                .map(|(a, m)| a.iter().zip(m).map(|(c, r)| c * *r).collect())
                .collect()
        };
        for _ in 0..iters {
            let inverse = stft.synthesize(&apply(&angles));
            let next = stft.analyze(&inverse);
            for ((ang, cur), prev) in angles.iter_mut().zip(&next).zip(&rebuilt) {
                for ((a, c), p) in ang.iter_mut().zip(cur).zip(prev) {
                    let v = c - p * alpha;
                    let n = v.norm();
                    *a = if n > 1e-16 { v / n } else { Complex64::new(1.0, 0.0) };
                }
            }
            rebuilt = next;
        }
        Waveform::new(stft.synthesize(&apply(&angles)), cfg.sample_rate)
    }
}

/// Largest eigenvalue of `M^T M` by power iteration, padded slightly.
fn gram_norm(bank: &MelFilterbank) -> f64 {
    let mut v = vec![1.0; bank.n_bins()];
    let mut tmp = vec![0.0; bank.n_mels()];
    let mut lambda = 1.0;
    for _ in 0..100 {
        bank.apply(&v, &mut tmp);
        bank.apply_transpose(&tmp, &mut v);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 1.0;
        }
        lambda = norm;
        v.iter_mut().for_each(|x| *x /= norm);
    }
    lambda * 1.01
}

/// Griffin-Lim decoding of log-mel frames with default settings and the
/// given iteration count. Output length `(L - 1) * hop + win`.
pub fn griffin_lim(mel: &EmbeddingSequence, cfg: &MelConfig, iters: usize) -> Result<Waveform> {
    GriffinLim::new(
        cfg,
        GriffinLimConfig {
            iters: iters.max(1),
            ..Default::default()
        },
    )?
    .decode_with_iters(mel, iters)
}

/// Frequency of the largest non-DC magnitude in the Hann-windowed,
/// zero-padded spectrum of `x`.
pub fn peak_frequency(x: &[f64], sample_rate: u32) -> f64 {
    let n = (x.len().max(2) * 2).next_power_of_two();
    let mut planner = RealFftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);
    let mut buf = fft.make_input_vec();
    let w = hann_periodic(x.len());
    for (b, (s, wi)) in buf.iter_mut().zip(x.iter().zip(&w)) {
        *b = s * wi;
    }
    let mut spec = fft.make_output_vec();
    fft.process(&mut buf, &mut spec).expect("sizes match");
    let (k, _) = spec
        .iter()
        .enumerate()
        .skip(1)
        .fold((0, -1.0), |(bk, bm), (k, c)| {
            let m = c.norm();
            if m > bm {
                (k, m)
            } else {
                (bk, bm)
            }
        });
    k as f64 * sample_rate as f64 / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(freq: f64, secs: f64) -> Waveform {
        let n = (16000.0 * secs) as usize;
        Waveform::new(
            (0..n)
                .map(|i| 0.5 * (2.0 * PI * freq * i as f64 / 16000.0).sin())
                .collect(),
            16000,
        )
        .unwrap()
    }

    #[test]
    fn default_config_geometry() {
        let c = MelConfig::default();
        assert_eq!(c.win_samples(), 736);
        assert_eq!(c.hop_samples(), 320);
        assert_eq!(c.fft_size, 1024);
        c.validate().unwrap();
    }

    #[test]
    fn zero_input_hits_floor() {
        let cfg = MelConfig::default();
        let mel = mel_spectrogram(&Waveform::zeros(16000, 16000).unwrap(), &cfg).unwrap();
        let floor = cfg.log_floor.ln();
        assert!(mel.data().iter().all(|&v| v == floor));
    }

    #[test]
    fn frame_count_matches_enumeration() {
        let cfg = MelConfig::default();
        for len in [736, 737, 1055, 1056, 16000, 16001] {
            let mel = mel_spectrogram(&Waveform::zeros(len, 16000).unwrap(), &cfg).unwrap();
            let enumerated = (0..).take_while(|l| l * 320 + 736 <= len).count();
            assert_eq!(mel.n_frames(), enumerated, "len {len}");
        }
        let one_sec = mel_spectrogram(&Waveform::zeros(16000, 16000).unwrap(), &cfg).unwrap();
        assert_eq!(one_sec.n_frames(), 48);
        assert_eq!(one_sec.hop_samples(), 320);
        assert_eq!(one_sec.win_samples(), 736);
    }

    #[test]
    fn short_input_rejected() {
        let cfg = MelConfig::default();
        let err = mel_spectrogram(&Waveform::zeros(735, 16000).unwrap(), &cfg).unwrap_err();
        assert!(matches!(err, Error::TooShort { .. }));
    }

    #[test]
    fn tone_lands_in_nearest_band() {
        let cfg = MelConfig::default();
        let mel = mel_spectrogram(&tone(1000.0, 1.0), &cfg).unwrap();
        let bank = MelFilterbank::new(&cfg);
        let nearest = bank
            .centers_hz()
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - 1000.0).abs().total_cmp(&(b.1 - 1000.0).abs()))
            .unwrap()
            .0;
        for f in mel.frames() {
            let arg = f
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            assert_eq!(arg, nearest);
        }
    }

    #[test]
    fn values_bounded_below_by_floor() {
        let cfg = MelConfig::default();
        let mel = mel_spectrogram(&tone(300.0, 0.5), &cfg).unwrap();
        let floor = cfg.log_floor.ln();
        assert!(mel.data().iter().all(|v| v.is_finite() && *v >= floor));
    }

    #[test]
    fn stft_round_trip() {
        let stft = Stft::new(hann_periodic(736), 320, 1024);
        let x: Vec<f64> = (0..8000).map(|i| ((i * 7919) % 101) as f64 / 101.0 - 0.5).collect();
        let y = stft.synthesize(&stft.analyze(&x));
        assert_eq!(y.len(), (stft.n_frames(x.len()) - 1) * 320 + 736);
        // interior samples are exactly reconstructed
        for i in 736..y.len() - 736 {
            assert!((x[i] - y[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn silence_decodes_to_silence() {
        let cfg = MelConfig::default();
        let mel = mel_spectrogram(&Waveform::zeros(8000, 16000).unwrap(), &cfg).unwrap();
        let out = griffin_lim(&mel, &cfg, 10).unwrap();
        assert_eq!(out.len(), (mel.n_frames() - 1) * 320 + 736);
        assert!(out.power().sqrt() < 1e-3);
    }

    #[test]
    fn tone_survives_griffin_lim() {
        let cfg = MelConfig::default();
        let mel = mel_spectrogram(&tone(440.0, 1.0), &cfg).unwrap();
        let out = griffin_lim(&mel, &cfg, 60).unwrap();
        let bin = 16000.0 / cfg.fft_size as f64;
        let peak = peak_frequency(out.samples(), 16000);
        assert!((peak - 440.0).abs() <= bin, "peak {peak}");
    }

    #[test]
    fn more_iterations_fit_better() {
        let cfg = MelConfig::default();
        let x: Vec<f64> = (0..16000)
            .map(|i| {
                let t = i as f64 / 16000.0;
                0.4 * (2.0 * PI * 220.0 * t).sin() + 0.2 * (2.0 * PI * 660.0 * t).sin()
            })
            .collect();
        let target = mel_spectrogram(&Waveform::new(x, 16000).unwrap(), &cfg).unwrap();
        let l1 = |iters| {
            let out = griffin_lim(&target, &cfg, iters).unwrap();
            let m = mel_spectrogram(&out, &cfg).unwrap();
            m.data()
                .iter()
                .zip(target.data())
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
        };
        let (one, sixty) = (l1(1), l1(60));
        assert!(sixty < one, "{sixty} !< {one}");
    }

    #[test]
    fn dimension_mismatch() {
        let cfg = MelConfig::default();
        let bad = EmbeddingSequence::new(vec![0.0; 10], 5, 320, 736, 16000).unwrap();
        assert!(matches!(
            griffin_lim(&bad, &cfg, 1),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
