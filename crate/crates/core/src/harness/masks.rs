use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inpaint::MaskSpec;

/// Default distance kept between a mask and either end of the utterance.
pub const DEFAULT_EDGE_MARGIN_MS: u32 = 100;

/// Stable 64-bit seed for `(seed, key)`, independent of platform and of the
/// order in which keys are visited.
pub fn keyed_seed(seed: u64, key: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in key.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    // splitmix64 finalizer
    let mut z = h ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn ms_to_samples(ms: u32, rate: u32) -> usize {
    ((ms as u64 * rate as u64 + 500) / 1000) as usize
}

/// One generated mask, as written to a masks JSON-lines file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskRecord {
    pub utt: String,
    pub t1: usize,
    pub t2: usize,
    pub unit: String,
    pub mask_ms: u32,
    pub seed: u64,
}

impl MaskRecord {
    pub fn mask(&self) -> Result<MaskSpec> {
        if self.unit != "samples" {
            return Err(Error::format("mask", format!("unit {:?}", self.unit)));
        }
        MaskSpec::new(self.t1, self.t2)
    }
}

/// Utterance length information needed to place a mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UttLength {
    pub utt: String,
    pub len: usize,
    pub sample_rate: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MaskGenReport {
    pub masks: Vec<MaskRecord>,
    /// Utterances too short for the mask and its margins, with the reason.
    pub skipped: Vec<(String, String)>,
}

/// Onset drawn uniformly from `[margin, len - margin - width]`.
pub fn draw_mask(
    utt: &str,
    len: usize,
    rate: u32,
    mask_ms: u32,
    seed: u64,
    margin_ms: u32,
) -> Result<MaskSpec> {
    let width = ms_to_samples(mask_ms, rate);
    let margin = ms_to_samples(margin_ms, rate);
    if width == 0 {
        return Err(Error::InvalidArgument("mask length must be positive".into()));
    }
    let needed = width + 2 * margin;
    if len < needed {
        return Err(Error::TooShort {
            len,
            window: needed,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(keyed_seed(seed, utt));
    let t1 = rng.random_range(margin..=len - margin - width);
    MaskSpec::with_len(t1, width)
}

pub fn gen_masks(utts: &[UttLength], mask_ms: u32, seed: u64, margin_ms: u32) -> MaskGenReport {
    let mut report = MaskGenReport::default();
    for u in utts {
        match draw_mask(&u.utt, u.len, u.sample_rate, mask_ms, seed, margin_ms) {
            Ok(m) => report.masks.push(MaskRecord {
                utt: u.utt.clone(),
                t1: m.t1,
                t2: m.t2,
                unit: "samples".into(),
                mask_ms,
                seed,
            }),
            Err(e) => report.skipped.push((u.utt.clone(), e.to_string())),
        }
    }
    report
}
