//! WebAssembly bindings for the demo page in `www/`.

pub mod demo;

use wasm_bindgen::prelude::*;

fn js(e: String) -> JsValue {
    JsValue::from_str(&e)
}

#[wasm_bindgen]
pub fn sample_rate() -> u32 {
    demo::RATE
}

/// Two to three seconds of synthetic vowel-like speech.
#[wasm_bindgen]
pub fn synth_utterance(seed: u32) -> Vec<f32> {
    demo::synth_utterance(seed)
}

#[wasm_bindgen]
pub fn tone(freq: f64, secs: f64) -> Vec<f32> {
    demo::tone(freq, secs)
}

#[wasm_bindgen]
pub fn peak_hz(samples: &[f32]) -> f64 {
    demo::peak_hz(samples)
}

#[wasm_bindgen]
pub struct InpaintResult {
    inner: demo::InpaintDemo,
}

#[wasm_bindgen]
impl InpaintResult {
    pub fn corrupted(&self) -> Vec<f32> {
        self.inner.corrupted.clone()
    }

    pub fn inpainted(&self) -> Vec<f32> {
        self.inner.inpainted.clone()
    }

    pub fn t1(&self) -> usize {
        self.inner.t1
    }

    pub fn t2(&self) -> usize {
        self.inner.t2
    }

    pub fn stoi_zero_fill(&self) -> f64 {
        self.inner.stoi_zero_fill
    }

    pub fn stoi_inpainted(&self) -> f64 {
        self.inner.stoi_inpainted
    }
}

#[wasm_bindgen]
pub fn inpaint_li(samples: &[f32], mask_ms: u32, position: f64, gl_iters: usize) -> Result<InpaintResult, JsValue> {
    demo::inpaint_li(samples, mask_ms, position, gl_iters)
        .map(|inner| InpaintResult { inner })
        .map_err(js)
}

#[wasm_bindgen]
pub struct NoisyResult {
    samples: Vec<f32>,
    stoi: f64,
}

#[wasm_bindgen]
impl NoisyResult {
    pub fn samples(&self) -> Vec<f32> {
        self.samples.clone()
    }

    pub fn stoi(&self) -> f64 {
        self.stoi
    }
}

#[wasm_bindgen]
pub fn add_noise(samples: &[f32], snr_db: f64, seed: u32) -> Result<NoisyResult, JsValue> {
    demo::noisy_stoi(samples, snr_db, seed)
        .map(|(samples, stoi)| NoisyResult { samples, stoi })
        .map_err(js)
}

#[wasm_bindgen]
pub fn stretch(samples: &[f32], factor: f64) -> Result<Vec<f32>, JsValue> {
    demo::stretch(samples, factor).map_err(js)
}
