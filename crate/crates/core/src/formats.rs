//! File formats shared with external model runners.
//!
//! * SIEF: `"SIEF"`, version, sample rate, hop, win, dim (u32 each),
//!   frame count (u64), then `f32` frames row-major.
//! * SICB: `"SICB"`, version (u32), kind (u8: 0 euclidean, 1 cosine),
//!   K, D (u32), temperature (f32), centroids as `f32`; cosine codebooks
//!   append projection rows, cols (u32) and its `f32` entries.
//! * Units: one index per line, with a `<file>.json` sidecar holding the
//!   codebook size and frame geometry.
//!
//! Everything is little-endian.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingSequence;
use crate::error::{Error, Result};
use crate::inpaint::{FrameGeometry, MaskSpec};
use crate::quantize::{Codebook, CodebookKind, Projection, UnitSequence};

pub const SIEF_MAGIC: &[u8; 4] = b"SIEF";
pub const SICB_MAGIC: &[u8; 4] = b"SICB";
pub const FORMAT_VERSION: u32 = 1;

fn open(path: &Path) -> Result<BufReader<fs::File>> {
    match fs::File::open(path) {
        Ok(f) => Ok(BufReader::new(f)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            Err(Error::FileNotFound(path.to_path_buf()))
        }
        Err(e) => Err(e.into()),
    }
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|source| Error::Unwritable {
            path: path.to_path_buf(),
            source,
        })
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
    format: &'static str,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let Some(end) = end else {
            return Err(Error::format(self.format, "truncated"));
        };
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(4).ok_or_else(|| Error::format(self.format, "size overflow"))?)?;
        let out: Vec<f64> = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::format(self.format, "non-finite value"));
        }
        Ok(out)
    }

    fn header(&mut self, magic: &[u8; 4]) -> Result<()> {
        if self.take(4)? != magic {
            return Err(Error::format(self.format, "bad magic"));
        }
        let version = self.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::format(self.format, format!("unsupported version {version}")));
        }
        Ok(())
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::format(
                self.format,
                format!("{} trailing bytes", self.buf.len() - self.pos),
            ));
        }
        Ok(())
    }
}

fn put_f32s(out: &mut Vec<u8>, values: &[f64]) {
    for v in values {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
}

fn as_u32(v: usize, what: &'static str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::InvalidArgument(format!("{what} {v} exceeds u32")))
}

pub fn encode_sief(seq: &EmbeddingSequence) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(32 + seq.data().len() * 4);
    out.extend_from_slice(SIEF_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&seq.sample_rate().to_le_bytes());
    out.extend_from_slice(&as_u32(seq.hop_samples(), "hop")?.to_le_bytes());
    out.extend_from_slice(&as_u32(seq.win_samples(), "win")?.to_le_bytes());
    out.extend_from_slice(&as_u32(seq.dim(), "dim")?.to_le_bytes());
    out.extend_from_slice(&(seq.n_frames() as u64).to_le_bytes());
    put_f32s(&mut out, seq.data());
    Ok(out)
}

pub fn decode_sief(bytes: &[u8]) -> Result<EmbeddingSequence> {
    let mut c = Cursor {
        buf: bytes,
        pos: 0,
        format: "SIEF",
    };
    c.header(SIEF_MAGIC)?;
    let rate = c.u32()?;
    let hop = c.u32()? as usize;
    let win = c.u32()? as usize;
    let dim = c.u32()? as usize;
    let n = usize::try_from(c.u64()?).map_err(|_| Error::format("SIEF", "frame count overflow"))?;
    let count = n
        .checked_mul(dim)
        .ok_or_else(|| Error::format("SIEF", "size overflow"))?;
    let data = c.f32s(count)?;
    c.finish()?;
    EmbeddingSequence::new(data, dim, hop, win, rate)
        .map_err(|e| Error::format("SIEF", e.to_string()))
}

pub fn write_sief(seq: &EmbeddingSequence, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut f = create(path)?;
    f.write_all(&encode_sief(seq)?)?;
    f.flush()?;
    Ok(())
}

pub fn read_sief(path: impl AsRef<Path>) -> Result<EmbeddingSequence> {
    let mut buf = Vec::new();
    open(path.as_ref())?.read_to_end(&mut buf)?;
    decode_sief(&buf)
}

pub fn encode_sicb(cb: &Codebook) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(SICB_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    let (kind, tau) = match cb.kind() {
        CodebookKind::Euclidean => (0u8, 0.0),
        CodebookKind::Cosine { temperature, .. } => (1u8, *temperature),
    };
    out.push(kind);
    out.extend_from_slice(&as_u32(cb.k(), "K")?.to_le_bytes());
    out.extend_from_slice(&as_u32(cb.dim(), "D")?.to_le_bytes());
    out.extend_from_slice(&(tau as f32).to_le_bytes());
    put_f32s(&mut out, cb.centroids());
    if let CodebookKind::Cosine { projection, .. } = cb.kind() {
        out.extend_from_slice(&as_u32(projection.rows, "rows")?.to_le_bytes());
        out.extend_from_slice(&as_u32(projection.cols, "cols")?.to_le_bytes());
        put_f32s(&mut out, &projection.data);
    }
    Ok(out)
}

pub fn decode_sicb(bytes: &[u8]) -> Result<Codebook> {
    let mut c = Cursor {
        buf: bytes,
        pos: 0,
        format: "SICB",
    };
    c.header(SICB_MAGIC)?;
    let kind = c.u8()?;
    let k = c.u32()? as usize;
    let dim = c.u32()? as usize;
    let tau = c.f32()? as f64;
    let count = k
        .checked_mul(dim)
        .ok_or_else(|| Error::format("SICB", "size overflow"))?;
    let centroids = c.f32s(count)?;
    let kind = match kind {
        0 => CodebookKind::Euclidean,
        1 => {
            let rows = c.u32()? as usize;
            let cols = c.u32()? as usize;
            let n = rows
                .checked_mul(cols)
                .ok_or_else(|| Error::format("SICB", "size overflow"))?;
            let data = c.f32s(n)?;
            CodebookKind::Cosine {
                projection: Projection { rows, cols, data },
                temperature: tau,
            }
        }
        other => return Err(Error::format("SICB", format!("unknown kind {other}"))),
    };
    c.finish()?;
    Codebook::new(centroids, dim, kind).map_err(|e| Error::format("SICB", e.to_string()))
}

pub fn write_codebook(cb: &Codebook, path: impl AsRef<Path>) -> Result<()> {
    let mut f = create(path.as_ref())?;
    f.write_all(&encode_sicb(cb)?)?;
    f.flush()?;
    Ok(())
}

pub fn read_codebook(path: impl AsRef<Path>) -> Result<Codebook> {
    let mut buf = Vec::new();
    open(path.as_ref())?.read_to_end(&mut buf)?;
    decode_sicb(&buf)
}

/// Sidecar describing a unit file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitHeader {
    pub k: usize,
    pub n_frames: usize,
    pub hop_samples: usize,
    pub win_samples: usize,
    pub sample_rate: u32,
}

pub fn unit_sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

pub fn write_units(units: &UnitSequence, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut f = create(path)?;
    for i in &units.indices {
        writeln!(f, "{i}")?;
    }
    f.flush()?;
    let g = units.geometry;
    let header = UnitHeader {
        k: units.k,
        n_frames: units.len(),
        hop_samples: g.hop_samples,
        win_samples: g.win_samples,
        sample_rate: g.sample_rate,
    };
    let side = unit_sidecar_path(path);
    let mut s = create(&side)?;
    serde_json::to_writer_pretty(&mut s, &header)?;
    s.write_all(b"\n")?;
    s.flush()?;
    Ok(())
}

pub fn read_units(path: impl AsRef<Path>) -> Result<UnitSequence> {
    let path = path.as_ref();
    let header: UnitHeader = serde_json::from_reader(open(&unit_sidecar_path(path))?)?;
    let mut indices = Vec::with_capacity(header.n_frames);
    for (n, line) in open(path)?.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let v: u32 = line
            .parse()
            .map_err(|_| Error::format("units", format!("line {}: {line:?}", n + 1)))?;
        indices.push(v);
    }
    if indices.len() != header.n_frames {
        return Err(Error::format(
            "units",
            format!("sidecar says {} frames, file has {}", header.n_frames, indices.len()),
        ));
    }
    let geometry = FrameGeometry::new(header.win_samples, header.hop_samples, header.sample_rate)?;
    UnitSequence::new(indices, header.k, geometry)
}

#[derive(Serialize, Deserialize)]
struct MaskJson {
    t1: usize,
    t2: usize,
    unit: String,
}

pub fn mask_to_json(mask: &MaskSpec) -> String {
    serde_json::to_string(&MaskJson {
        t1: mask.t1,
        t2: mask.t2,
        unit: "samples".into(),
    })
    .expect("mask serializes")
}

pub fn mask_from_json(s: &str) -> Result<MaskSpec> {
    let m: MaskJson = serde_json::from_str(s)?;
    if m.unit != "samples" {
        return Err(Error::format("mask", format!("unit {:?} (expected \"samples\")", m.unit)));
    }
    MaskSpec::new(m.t1, m.t2)
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<MaskSpec> {
    let path = path.as_ref();
    let mut s = String::new();
    open(path)?.read_to_string(&mut s)?;
    mask_from_json(s.trim())
}

pub fn write_mask(mask: &MaskSpec, path: impl AsRef<Path>) -> Result<()> {
    let mut f = create(path.as_ref())?;
    writeln!(f, "{}", mask_to_json(mask))?;
    f.flush()?;
    Ok(())
}

/// Read every non-blank line of a JSON-lines file.
pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for (n, line) in open(path)?.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| {
            Error::format("jsonl", format!("{}:{}: {e}", path.display(), n + 1))
        })?);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(rows: &[T], path: impl AsRef<Path>) -> Result<()> {
    let mut f = create(path.as_ref())?;
    for r in rows {
        serde_json::to_writer(&mut f, r)?;
        f.write_all(b"\n")?;
    }
    f.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq() -> EmbeddingSequence {
        EmbeddingSequence::new(vec![0.5, -1.25, 3.0, 0.0, 2.5, -0.125], 2, 320, 400, 16000).unwrap()
    }

    #[test]
    fn sief_layout_and_round_trip() {
        let bytes = encode_sief(&seq()).unwrap();
        assert_eq!(&bytes[..4], b"SIEF");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 16000);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 320);
        assert_eq!(u32::from_le_bytes(bytes[16..20].try_into().unwrap()), 400);
        assert_eq!(u32::from_le_bytes(bytes[20..24].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(bytes[24..32].try_into().unwrap()), 3);
        assert_eq!(bytes.len(), 32 + 6 * 4);
        assert_eq!(decode_sief(&bytes).unwrap(), seq());
    }

    #[test]
    fn sief_rejects_damage() {
        let bytes = encode_sief(&seq()).unwrap();
        assert!(decode_sief(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode_sief(&extra).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_sief(&bad).is_err());
        let mut nan = bytes;
        nan[32..36].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(decode_sief(&nan).is_err());
    }

    #[test]
    fn sicb_round_trip_both_kinds() {
        let e = Codebook::euclidean(vec![0.0, 1.0, 2.0, 3.0], 2).unwrap();
        let bytes = encode_sicb(&e).unwrap();
        assert_eq!(bytes.len(), 4 + 4 + 1 + 4 + 4 + 4 + 16);
        assert_eq!(decode_sicb(&bytes).unwrap(), e);

        let p = Projection {
            rows: 2,
            cols: 3,
            data: vec![1.0, 0.0, 0.5, 0.0, 1.0, 0.25],
        };
        let c = Codebook::cosine(vec![1.0, 0.0, 0.0, 1.0], 2, p, 0.1).unwrap();
        let back = decode_sicb(&encode_sicb(&c).unwrap()).unwrap();
        assert_eq!(back.centroids(), c.centroids());
        match back.kind() {
            CodebookKind::Cosine {
                projection,
                temperature,
            } => {
                assert_eq!((projection.rows, projection.cols), (2, 3));
                assert!((temperature - 0.1).abs() < 1e-7);
            }
            _ => panic!("kind lost"),
        }
    }

    #[test]
    fn unit_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.txt");
        let u = UnitSequence::new(vec![3, 0, 7], 8, FrameGeometry::default()).unwrap();
        write_units(&u, &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "3\n0\n7\n");
        assert!(unit_sidecar_path(&path).exists());
        assert_eq!(read_units(&path).unwrap(), u);
        fs::write(&path, "3\n0\n9\n").unwrap();
        assert!(matches!(read_units(&path), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn mask_json() {
        let m = MaskSpec::new(3200, 6399).unwrap();
        let s = mask_to_json(&m);
        assert_eq!(s, r#"{"t1":3200,"t2":6399,"unit":"samples"}"#);
        assert_eq!(mask_from_json(&s).unwrap(), m);
        assert!(mask_from_json(r#"{"t1":1,"t2":2,"unit":"ms"}"#).is_err());
        assert!(mask_from_json(r#"{"t1":5,"t2":2,"unit":"samples"}"#).is_err());
    }
}
