use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::read_jsonl;

/// One utterance of a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    #[serde(alias = "utt")]
    pub utt_id: String,
    pub wav_path: PathBuf,
    #[serde(default)]
    pub transcript: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub units_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic_wav: Option<PathBuf>,
}

/// Record written by the recognition/synthesis runner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsrTtsEntry {
    pub utt: String,
    pub synthetic_wav: PathBuf,
    pub decoded_text: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl Manifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self> {
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(e.utt_id.as_str()) {
                return Err(Error::InvalidArgument(format!("duplicate utt_id {:?}", e.utt_id)));
            }
        }
        Ok(Self { entries })
    }

    /// JSON lines, one entry per line. Relative paths are taken relative to
    /// the manifest's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
        let mut entries: Vec<ManifestEntry> = read_jsonl(path)?;
        for e in &mut entries {
            resolve(&base, &mut e.wav_path);
            for p in [&mut e.embedding_path, &mut e.units_path, &mut e.synthetic_wav]
                .into_iter()
                .flatten()
            {
                resolve(&base, p);
            }
        }
        Self::new(entries)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, utt_id: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.utt_id == utt_id)
    }

    /// Paths referenced by entries that do not exist.
    pub fn missing_files(&self) -> Vec<PathBuf> {
        self.entries
            .iter()
            .flat_map(|e| {
                std::iter::once(&e.wav_path)
                    .chain(&e.embedding_path)
                    .chain(&e.units_path)
                    .chain(&e.synthetic_wav)
            })
            .filter(|p| !p.exists())
            .cloned()
            .collect()
    }
}

pub fn load_asr_tts_entries(path: impl AsRef<Path>) -> Result<Vec<AsrTtsEntry>> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
    let mut entries: Vec<AsrTtsEntry> = read_jsonl(path)?;
    for e in &mut entries {
        resolve(&base, &mut e.synthetic_wav);
    }
    Ok(entries)
}
