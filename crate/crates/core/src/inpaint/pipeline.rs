use std::fmt;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::str::FromStr;

use log::debug;
use serde::{Deserialize, Serialize};

use crate::align::{assemble_asr_tts, AsrTtsOptions, WsolaConfig};
use crate::audio::{read_wav, write_wav, Waveform};
use crate::embedding::EmbeddingSequence;
use crate::error::{Error, Result};
use crate::formats::{read_sief, write_codebook, write_sief, write_units};
use crate::inpaint::{
    apply_corruption, fade_samples, interpolate_mel_linear, samples_to_frames, stitch_crossfade,
    FrameGeometry, FrameInterval, MaskSpec, DEFAULT_FADE_SECS,
};
use crate::quantize::{lookup, quantize, Codebook, CodebookKind, UnitSequence};
use crate::resample::resample;
use crate::spectral::{GriffinLim, GriffinLimConfig, MelAnalyzer, MelConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    /// Linear interpolation of log-mel frames across the gap.
    #[serde(rename = "li")]
    Li,
    /// Euclidean units from the encoder, decoded by a unit vocoder.
    #[serde(rename = "pt")]
    Pt,
    /// Cosine-softmax units in mel space, decoded by a mel vocoder.
    #[serde(rename = "ft")]
    Ft,
    /// Externally recognized and re-synthesized speech, aligned and inserted.
    #[serde(rename = "asr-tts", alias = "asr_tts")]
    AsrTts,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Li, Method::Pt, Method::Ft, Method::AsrTts];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Li => "li",
            Method::Pt => "pt",
            Method::Ft => "ft",
            Method::AsrTts => "asr-tts",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "li" => Ok(Method::Li),
            "pt" => Ok(Method::Pt),
            "ft" => Ok(Method::Ft),
            "asr-tts" | "asr_tts" => Ok(Method::AsrTts),
            other => Err(Error::InvalidArgument(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Informed,
    Blind,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Informed => "informed",
            Mode::Blind => "blind",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "informed" => Ok(Mode::Informed),
            "blind" => Ok(Mode::Blind),
            other => Err(Error::InvalidArgument(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InpaintResult {
    pub waveform: Waveform,
    /// `None` for blind runs and for informed runs with nothing masked.
    pub mask: Option<MaskSpec>,
    pub mode: Mode,
    pub method: Method,
}

/// Turns frame features (or units) back into audio. Sample 0 of the output
/// lines up with the start of the first frame.
pub trait Decoder: Send + Sync {
    fn decode_features(&self, feats: &EmbeddingSequence) -> Result<Waveform>;

    fn decode_units(&self, units: &UnitSequence, cb: &Codebook) -> Result<Waveform> {
        self.decode_features(&lookup(units, cb)?)
    }
}

/// Griffin-Lim over log-mel features.
pub struct GriffinLimDecoder {
    gl: GriffinLim,
}

impl GriffinLimDecoder {
    pub fn new(mel: &MelConfig, gl: GriffinLimConfig) -> Result<Self> {
        Ok(Self {
            gl: GriffinLim::new(mel, gl)?,
        })
    }
}

impl Decoder for GriffinLimDecoder {
    fn decode_features(&self, feats: &EmbeddingSequence) -> Result<Waveform> {
        let cfg = self.gl.config();
        if feats.hop_samples() != cfg.hop_samples() || feats.sample_rate() != cfg.sample_rate {
            return Err(Error::InvalidArgument(format!(
                "griffin-lim decoder runs at hop {} / {} Hz, features have hop {} / {} Hz",
                cfg.hop_samples(),
                cfg.sample_rate,
                feats.hop_samples(),
                feats.sample_rate()
            )));
        }
        self.gl.decode(feats)
    }
}

fn fill_template(template: &[String], vars: &[(&str, String)]) -> Result<Command> {
    let mut args = template.iter().map(|a| {
        vars.iter()
            .fold(a.clone(), |s, (k, v)| s.replace(&format!("{{{k}}}"), v))
    });
    let program = args
        .next()
        .ok_or_else(|| Error::InvalidArgument("empty external command".into()))?;
    let mut cmd = Command::new(program);
    cmd.args(args);
    Ok(cmd)
}

fn run(mut cmd: Command) -> Result<()> {
    debug!("running {cmd:?}");
    let out = cmd
        .output()
        .map_err(|e| Error::External(format!("{cmd:?}: {e}")))?;
    if !out.status.success() {
        return Err(Error::External(format!(
            "{cmd:?} exited with {}: {}",
            out.status,
            String::from_utf8_lossy(&out.stderr).trim()
        )));
    }
    Ok(())
}

fn path_str(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

/// Decoder delegated to an external program. The argument template may use
/// `{input}` (a SIEF file, or a unit file with its JSON sidecar),
/// `{output}` (the WAV to produce), `{kind}` (`features` or `units`) and
/// `{codebook}`.
pub struct ExternalDecoder {
    pub command: Vec<String>,
    pub codebook_path: Option<PathBuf>,
    /// Output is resampled to this rate.
    pub sample_rate: u32,
}

impl ExternalDecoder {
    fn invoke(&self, kind: &str, write_input: impl FnOnce(&Path) -> Result<()>, codebook: Option<&Codebook>) -> Result<Waveform> {
        let dir = tempfile::tempdir()?;
        let input = dir.path().join(if kind == "units" { "units.txt" } else { "input.sief" });
        let output = dir.path().join("output.wav");
        write_input(&input)?;
        let codebook_path = match (&self.codebook_path, codebook) {
            (Some(p), _) => path_str(p),
            (None, Some(cb)) => {
                let p = dir.path().join("codebook.sicb");
                write_codebook(cb, &p)?;
                path_str(&p)
            }
            (None, None) => String::new(),
        };
        run(fill_template(
            &self.command,
            &[
                ("input", path_str(&input)),
                ("output", path_str(&output)),
                ("kind", kind.to_string()),
                ("codebook", codebook_path),
            ],
        )?)?;
        resample(&read_wav(&output)?, self.sample_rate)
    }
}

impl Decoder for ExternalDecoder {
    fn decode_features(&self, feats: &EmbeddingSequence) -> Result<Waveform> {
        self.invoke("features", |p| write_sief(feats, p), None)
    }

    fn decode_units(&self, units: &UnitSequence, cb: &Codebook) -> Result<Waveform> {
        self.invoke("units", |p| write_units(units, p), Some(cb))
    }
}

/// Frame-level representation of a waveform.
pub trait EmbeddingSource: Send + Sync {
    fn geometry(&self) -> FrameGeometry;

    /// `mask`, when given, flags frames the model should treat as missing.
    fn embed(&self, w: &Waveform, mask: Option<FrameInterval>) -> Result<EmbeddingSequence>;
}

/// Log-mel frames used in place of encoder embeddings.
pub struct MelEmbedder {
    analyzer: MelAnalyzer,
}

impl MelEmbedder {
    pub fn new(cfg: &MelConfig) -> Result<Self> {
        Ok(Self {
            analyzer: MelAnalyzer::new(cfg)?,
        })
    }
}

impl EmbeddingSource for MelEmbedder {
    fn geometry(&self) -> FrameGeometry {
        let c = self.analyzer.config();
        FrameGeometry {
            win_samples: c.win_samples(),
            hop_samples: c.hop_samples(),
            sample_rate: c.sample_rate,
        }
    }

    fn embed(&self, w: &Waveform, _mask: Option<FrameInterval>) -> Result<EmbeddingSequence> {
        self.analyzer.analyze(w)
    }
}

/// Embeddings computed ahead of time for one specific waveform.
pub struct PrecomputedEmbeddings {
    pub sequence: EmbeddingSequence,
}

impl EmbeddingSource for PrecomputedEmbeddings {
    fn geometry(&self) -> FrameGeometry {
        self.sequence.geometry()
    }

    fn embed(&self, w: &Waveform, _mask: Option<FrameInterval>) -> Result<EmbeddingSequence> {
        if w.sample_rate() != self.sequence.sample_rate() {
            return Err(Error::RateMismatch(w.sample_rate(), self.sequence.sample_rate()));
        }
        Ok(self.sequence.clone())
    }
}

/// Embeddings produced by an external program. Template variables:
/// `{input}` (WAV), `{output}` (SIEF to produce), `{mask_first}` and
/// `{mask_last}` (frame indices, `-1` when unmasked).
pub struct ExternalEmbedder {
    pub command: Vec<String>,
    pub geometry: FrameGeometry,
}

impl EmbeddingSource for ExternalEmbedder {
    fn geometry(&self) -> FrameGeometry {
        self.geometry
    }

    fn embed(&self, w: &Waveform, mask: Option<FrameInterval>) -> Result<EmbeddingSequence> {
        let dir = tempfile::tempdir()?;
        let input = dir.path().join("input.wav");
        let output = dir.path().join("output.sief");
        write_wav(w, &input)?;
        let (first, last) = mask.map_or(("-1".to_string(), "-1".to_string()), |m| {
            (m.first.to_string(), m.last.to_string())
        });
        run(fill_template(
            &self.command,
            &[
                ("input", path_str(&input)),
                ("output", path_str(&output)),
                ("mask_first", first),
                ("mask_last", last),
            ],
        )?)?;
        read_sief(&output)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InpaintOptions {
    pub mel: MelConfig,
    pub fade_secs: f64,
    /// Extra frames decoded on each side of the masked frames.
    pub context_frames: usize,
    pub wsola: WsolaConfig,
    pub dtw_band: Option<usize>,
}

impl Default for InpaintOptions {
    fn default() -> Self {
        Self {
            mel: MelConfig::default(),
            fade_secs: DEFAULT_FADE_SECS,
            context_frames: 2,
            wsola: WsolaConfig::default(),
            dtw_band: None,
        }
    }
}

/// Everything a method may need. Which fields are required depends on the
/// method: `decoder` for li; `embedder`, `codebook` and `decoder` for pt
/// and ft; `synthetic` for asr-tts.
#[derive(Default, Clone, Copy)]
pub struct InpaintDeps<'a> {
    pub decoder: Option<&'a dyn Decoder>,
    pub embedder: Option<&'a dyn EmbeddingSource>,
    pub codebook: Option<&'a Codebook>,
    pub synthetic: Option<&'a Waveform>,
}

fn need<T>(v: Option<T>, method: Method, what: &str) -> Result<T> {
    v.ok_or_else(|| Error::MissingDependency {
        method: method.to_string(),
        what: what.to_string(),
    })
}

fn check_codebook_kind(method: Method, cb: &Codebook) -> Result<()> {
    let ok = matches!(
        (method, cb.kind()),
        (Method::Pt, CodebookKind::Euclidean) | (Method::Ft, CodebookKind::Cosine { .. })
    );
    if !ok {
        return Err(Error::InvalidArgument(format!(
            "method {method} cannot use a {} codebook",
            match cb.kind() {
                CodebookKind::Euclidean => "euclidean",
                CodebookKind::Cosine { .. } => "cosine",
            }
        )));
    }
    Ok(())
}

/// Frames to decode: the masked frames plus context, widened until the
/// mask and its fades are covered, clipped to the sequence.
fn decode_span(
    frames: FrameInterval,
    geom: &FrameGeometry,
    n_frames: usize,
    cover: (usize, usize),
    context: usize,
) -> (usize, usize) {
    let (hop, win) = (geom.hop_samples, geom.win_samples);
    let first = frames.first.saturating_sub(context).min(cover.0 / hop);
    let last = (frames.last + context).max((cover.1 + 1).saturating_sub(win).div_ceil(hop));
    (first.min(n_frames - 1), last.min(n_frames - 1))
}

/// Decoded audio starting at `offset`, extended with `fallback` wherever it
/// falls short of `[start, end]`.
fn cover_segment(
    decoded: &Waveform,
    offset: usize,
    fallback: &Waveform,
    (start, end): (usize, usize),
) -> Result<Waveform> {
    let mut filled = 0usize;
    let seg: Vec<f64> = (start..=end)
        .map(|i| match i.checked_sub(offset).and_then(|j| decoded.samples().get(j)) {
            Some(&v) => v,
            None => {
                filled += 1;
                fallback.samples()[i]
            }
        })
        .collect();
    if filled > 0 {
        debug!("decoder output short by {filled} samples around the mask");
    }
    Waveform::new(seg, fallback.sample_rate())
}

fn to_rate(w: Waveform, rate: u32) -> Result<Waveform> {
    if w.sample_rate() == rate {
        Ok(w)
    } else {
        resample(&w, rate)
    }
}

/// Reconstruct `[t1, t2]` of `w` knowing where the mask is. The input is
/// zero-filled over the mask first, so passing the clean or the already
/// corrupted signal gives the same result. Output has the input's length
/// and is untouched outside the mask and its fades. `mask == None` returns
/// the input unchanged.
pub fn run_informed(
    w: &Waveform,
    mask: Option<&MaskSpec>,
    method: Method,
    deps: &InpaintDeps<'_>,
    opts: &InpaintOptions,
) -> Result<InpaintResult> {
    let Some(mask) = mask else {
        return Ok(InpaintResult {
            waveform: w.clone(),
            mask: None,
            mode: Mode::Informed,
            method,
        });
    };
    mask.check_within(w.len())?;
    let corrupted = apply_corruption(w, mask)?;
    let rate = w.sample_rate();
    let fade = fade_samples(opts.fade_secs, rate);
    let cover = (mask.t1.saturating_sub(fade), (mask.t2 + fade).min(w.len() - 1));

    let (decoded, offset) = match method {
        Method::AsrTts => {
            let synthetic = need(deps.synthetic, method, "a synthetic rendering")?;
            let asr = AsrTtsOptions {
                mel: opts.mel.clone(),
                wsola: opts.wsola,
                fade_secs: opts.fade_secs,
                dtw_band: opts.dtw_band,
            };
            let out = assemble_asr_tts(&corrupted, synthetic, mask, &asr)?;
            return Ok(InpaintResult {
                waveform: out.waveform,
                mask: Some(*mask),
                mode: Mode::Informed,
                method,
            });
        }
        Method::Li => {
            let decoder = need(deps.decoder, method, "a mel decoder")?;
            let mel = MelAnalyzer::new(&opts.mel)?.analyze(&corrupted)?;
            let geom = mel.geometry();
            let frames = samples_to_frames(mask, &geom, w.len())?;
            let filled = interpolate_mel_linear(&mel, frames.range())?;
            let (a, b) = decode_span(frames, &geom, mel.n_frames(), cover, opts.context_frames);
            let out = decoder.decode_features(&filled.slice_frames(a..b + 1)?)?;
            (to_rate(out, rate)?, a * geom.hop_samples)
        }
        Method::Pt | Method::Ft => {
            let embedder = need(deps.embedder, method, "an embedding source")?;
            let cb = need(deps.codebook, method, "a codebook")?;
            let decoder = need(deps.decoder, method, "a unit decoder")?;
            check_codebook_kind(method, cb)?;
            let geom = embedder.geometry();
            let frames = samples_to_frames(mask, &geom, w.len())?;
            let z = embedder.embed(&corrupted, Some(frames))?;
            if z.n_frames() <= frames.last {
                return Err(Error::InvalidArgument(format!(
                    "{} embedding frames do not reach masked frame {}",
                    z.n_frames(),
                    frames.last
                )));
            }
            let units = quantize(&z, cb)?;
            let (a, b) = decode_span(frames, &geom, z.n_frames(), cover, opts.context_frames);
            let out = decoder.decode_units(&units.slice(a..b + 1), cb)?;
            (to_rate(out, rate)?, a * geom.hop_samples)
        }
    };
    let generated = cover_segment(&decoded, offset, &corrupted, cover)?;
    let waveform = stitch_crossfade(w, &generated, cover.0, mask, opts.fade_secs)?;
    Ok(InpaintResult {
        waveform,
        mask: Some(*mask),
        mode: Mode::Informed,
        method,
    })
}

/// Resynthesize the whole signal without knowledge of the mask. Output
/// length is `(L - 1) * hop + win` for the `L` embedding frames.
pub fn run_blind(w: &Waveform, method: Method, deps: &InpaintDeps<'_>) -> Result<InpaintResult> {
    if matches!(method, Method::Li | Method::AsrTts) {
        return Err(Error::BlindUnsupported(method.to_string()));
    }
    let embedder = need(deps.embedder, method, "an embedding source")?;
    let cb = need(deps.codebook, method, "a codebook")?;
    let decoder = need(deps.decoder, method, "a unit decoder")?;
    check_codebook_kind(method, cb)?;
    let z = embedder.embed(w, None)?;
    if z.is_empty() {
        return Err(Error::EmptySequence);
    }
    let units = quantize(&z, cb)?;
    let out = to_rate(decoder.decode_units(&units, cb)?, w.sample_rate())?;
    let target = (z.n_frames() - 1) * z.hop_samples() + z.win_samples();
    if out.len() != target {
        debug!("decoder produced {} samples, trimming to {target}", out.len());
    }
    Ok(InpaintResult {
        waveform: out.fit_to_len(target),
        mask: None,
        mode: Mode::Blind,
        method,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantize::{train_kmeans, KmeansConfig, Projection};
    use crate::synth::{vowel_utterance, UtteranceSpec};

    struct Fixture {
        mel: MelConfig,
        embedder: MelEmbedder,
        decoder: GriffinLimDecoder,
        euclid: Codebook,
        cosine: Codebook,
    }

    fn fixture() -> Fixture {
        let mel = MelConfig::default();
        let embedder = MelEmbedder::new(&mel).unwrap();
        let data: Vec<_> = (0..3)
            .map(|s| embedder.embed(&vowel_utterance(&UtteranceSpec::default(), s), None).unwrap())
            .collect();
        let cfg = KmeansConfig {
            k: 32,
            max_iters: 20,
            ..KmeansConfig::default()
        };
        let euclid = train_kmeans(&data, &cfg).unwrap().codebook;
        let cosine = euclid
            .clone()
            .into_cosine(Projection::identity(mel.n_mels), 0.1)
            .unwrap();
        let gl = GriffinLimConfig {
            iters: 8,
            ..GriffinLimConfig::default()
        };
        Fixture {
            decoder: GriffinLimDecoder::new(&mel, gl).unwrap(),
            mel,
            embedder,
            euclid,
            cosine,
        }
    }

    fn assert_untouched(out: &Waveform, x: &Waveform, mask: &MaskSpec) {
        assert_eq!(out.len(), x.len());
        for i in (0..mask.t1 - 80).chain(mask.t2 + 81..x.len()) {
            assert_eq!(out.samples()[i].to_bits(), x.samples()[i].to_bits(), "sample {i}");
        }
    }

    #[test]
    fn informed_methods_keep_everything_outside_the_fades() {
        let f = fixture();
        let x = vowel_utterance(&UtteranceSpec::default(), 9);
        let mask = MaskSpec::with_len(14000, 3200).unwrap();
        let opts = InpaintOptions::default();
        for (method, cb) in [
            (Method::Li, None),
            (Method::Pt, Some(&f.euclid)),
            (Method::Ft, Some(&f.cosine)),
            (Method::AsrTts, None),
        ] {
            let deps = InpaintDeps {
                decoder: Some(&f.decoder),
                embedder: Some(&f.embedder),
                codebook: cb,
                synthetic: Some(&x),
            };
            let out = run_informed(&x, Some(&mask), method, &deps, &opts).unwrap();
            assert_untouched(&out.waveform, &x, &mask);
            assert_eq!(out.mode, Mode::Informed);
            assert!(out.waveform.samples()[mask.t1..=mask.t2].iter().any(|v| *v != 0.0));
        }
    }

    #[test]
    fn no_mask_is_passthrough() {
        let x = vowel_utterance(&UtteranceSpec::default(), 1);
        let out =
            run_informed(&x, None, Method::Li, &InpaintDeps::default(), &InpaintOptions::default())
                .unwrap();
        assert_eq!(out.waveform, x);
    }

    #[test]
    fn missing_dependencies_are_reported() {
        let f = fixture();
        let x = vowel_utterance(&UtteranceSpec::default(), 1);
        let mask = MaskSpec::with_len(8000, 1600).unwrap();
        let opts = InpaintOptions::default();
        let none = InpaintDeps::default();
        for m in Method::ALL {
            assert!(matches!(
                run_informed(&x, Some(&mask), m, &none, &opts),
                Err(Error::MissingDependency { .. })
            ));
        }
        let wrong = InpaintDeps {
            decoder: Some(&f.decoder),
            embedder: Some(&f.embedder),
            codebook: Some(&f.cosine),
            synthetic: None,
        };
        assert!(run_informed(&x, Some(&mask), Method::Pt, &wrong, &opts).is_err());
        let _ = f.mel;
    }

    #[test]
    fn blind_length_and_restrictions() {
        let f = fixture();
        let x = vowel_utterance(&UtteranceSpec::default(), 2);
        let deps = InpaintDeps {
            decoder: Some(&f.decoder),
            embedder: Some(&f.embedder),
            codebook: Some(&f.euclid),
            synthetic: Some(&x),
        };
        let out = run_blind(&x, Method::Pt, &deps).unwrap();
        let l = (x.len() - 736) / 320 + 1;
        assert_eq!(out.waveform.len(), (l - 1) * 320 + 736);
        assert_eq!(out.mode, Mode::Blind);
        for m in [Method::Li, Method::AsrTts] {
            assert!(matches!(run_blind(&x, m, &deps), Err(Error::BlindUnsupported(_))));
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.as_str()));
        }
        assert_eq!("asr_tts".parse::<Method>().unwrap(), Method::AsrTts);
        assert!("xx".parse::<Method>().is_err());
        assert_eq!("blind".parse::<Mode>().unwrap(), Mode::Blind);
    }

    #[test]
    fn external_decoder_runs_a_command() {
        let dir = tempfile::tempdir().unwrap();
        let wav = dir.path().join("fixed.wav");
        let x = Waveform::new(vec![0.25; 1000], 16000).unwrap();
        write_wav(&x, &wav).unwrap();
        let dec = ExternalDecoder {
            command: vec!["cp".into(), path_str(&wav), "{output}".into()],
            codebook_path: None,
            sample_rate: 16000,
        };
        let feats = EmbeddingSequence::new(vec![0.0; 80], 80, 320, 736, 16000).unwrap();
        let out = dec.decode_features(&feats).unwrap();
        assert_eq!(out.len(), 1000);
        let failing = ExternalDecoder {
            command: vec!["false".into()],
            codebook_path: None,
            sample_rate: 16000,
        };
        assert!(matches!(failing.decode_features(&feats), Err(Error::External(_))));
    }
}
