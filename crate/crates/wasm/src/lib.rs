//! WebAssembly bindings for an in-browser denoising demo.
//!
//! Pixels cross the boundary as row-major 8-bit grayscale. Each export has a
//! plain-Rust counterpart returning `Result<_, String>` so it can be tested natively.

use genre_core::metrics::{psnr, ssim, Peak, SsimConfig};
use genre_core::uwt::decompose;
use genre_core::{denoise, Distribution, FilterRealization, Image, NoiseModel, SolverConfig};
use wasm_bindgen::prelude::*;

/// Deepest decomposition offered by the page.
pub const MAX_LEVELS: usize = 6;

fn check_levels(width: usize, height: usize, levels: usize) -> Result<(), String> {
    if levels == 0 || levels > MAX_LEVELS {
        return Err(format!("levels must lie in 1..={MAX_LEVELS}"));
    }
    let m = 1usize << levels;
    if width % m != 0 || height % m != 0 {
        return Err(format!("{width}x{height} is not a multiple of {m}"));
    }
    Ok(())
}

fn image(pixels: &[u8], width: usize, height: usize) -> Result<Image, String> {
    Image::from_u8(width, height, pixels).map_err(|e| e.to_string())
}

/// A built-in test scene: `rings`, `blocks` or `mixed`.
pub fn scene(kind: &str, width: usize, height: usize) -> Result<Vec<u8>, String> {
    let (w, h) = (width as f64, height as f64);
    let img = match kind {
        "rings" => Image::from_fn(width, height, |r, c| {
            let (y, x) = (r as f64 - h / 2.0, c as f64 - w / 2.0);
            127.5 + 110.0 * ((x * x + y * y) / (0.9 * w)).cos()
        }),
        "blocks" => Image::from_fn(width, height, |r, c| {
            let tile = ((r * 8 / height) + (c * 8 / width)) % 2;
            40.0 + 170.0 * tile as f64 + 30.0 * (c as f64 / w)
        }),
        "mixed" => Image::from_fn(width, height, |r, c| {
            let (y, x) = (r as f64 / h, c as f64 / w);
            let disc = ((x - 0.35).powi(2) + (y - 0.4).powi(2) < 0.05) as u8 as f64;
            let bars = if y > 0.7 { 60.0 * ((x * 40.0).floor() % 2.0) } else { 0.0 };
            60.0 + 120.0 * x * (1.0 - y) + 70.0 * disc + bars
        }),
        other => return Err(format!("unknown scene {other:?}")),
    };
    Ok(img.to_u8())
}

/// Outcome of one noise-and-denoise round.
#[wasm_bindgen]
#[derive(Clone, Debug)]
pub struct DenoiseView {
    noisy: Vec<u8>,
    output: Vec<u8>,
    alpha: Vec<f64>,
    input_psnr: f64,
    output_psnr: f64,
    input_ssim: f64,
    output_ssim: f64,
    risk: f64,
    mse: f64,
}

#[wasm_bindgen]
impl DenoiseView {
    #[wasm_bindgen(getter)]
    pub fn noisy(&self) -> Vec<u8> {
        self.noisy.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn output(&self) -> Vec<u8> {
        self.output.clone()
    }
    /// Per-band gains, level-major with the low-pass band last.
    #[wasm_bindgen(getter)]
    pub fn alpha(&self) -> Vec<f64> {
        self.alpha.clone()
    }
    #[wasm_bindgen(getter, js_name = inputPsnr)]
    pub fn input_psnr(&self) -> f64 {
        self.input_psnr
    }
    #[wasm_bindgen(getter, js_name = outputPsnr)]
    pub fn output_psnr(&self) -> f64 {
        self.output_psnr
    }
    #[wasm_bindgen(getter, js_name = inputSsim)]
    pub fn input_ssim(&self) -> f64 {
        self.input_ssim
    }
    #[wasm_bindgen(getter, js_name = outputSsim)]
    pub fn output_ssim(&self) -> f64 {
        self.output_ssim
    }
    /// Estimated per-pixel MSE.
    #[wasm_bindgen(getter)]
    pub fn risk(&self) -> f64 {
        self.risk
    }
    /// True per-pixel MSE against the clean scene.
    #[wasm_bindgen(getter)]
    pub fn mse(&self) -> f64 {
        self.mse
    }
}

/// Adds seeded noise of standard deviation `sigma` to `clean` and denoises it.
#[allow(clippy::too_many_arguments)]
pub fn run_denoise(
    clean: &[u8],
    width: usize,
    height: usize,
    distribution: &str,
    sigma: f64,
    seed: u64,
    levels: usize,
    realization: &str,
) -> Result<DenoiseView, String> {
    check_levels(width, height, levels)?;
    let clean = image(clean, width, height)?;
    let dist: Distribution = distribution.parse().map_err(|e: genre_core::Error| e.to_string())?;
    let realization: FilterRealization = realization.parse().map_err(|e: genre_core::Error| e.to_string())?;
    let noisy = clean.add_noise(&NoiseModel::new(dist, sigma, seed)).map_err(|e| e.to_string())?;
    let d = denoise(&noisy, sigma, levels, &SolverConfig::default(), realization).map_err(|e| e.to_string())?;
    let cfg = SsimConfig::default();
    let score = |test: &Image| -> Result<(f64, f64), String> {
        Ok((psnr(&clean, test, Peak::Dynamic8Bit).map_err(|e| e.to_string())?, ssim(&clean, test, &cfg).map_err(|e| e.to_string())?))
    };
    let (input_psnr, input_ssim) = score(&noisy)?;
    let (output_psnr, output_ssim) = score(&d.image)?;
    Ok(DenoiseView {
        noisy: noisy.to_u8(),
        output: d.image.to_u8(),
        mse: d.image.mse(&clean).map_err(|e| e.to_string())?,
        alpha: d.diagnostics.alpha,
        risk: d.diagnostics.risk,
        input_psnr,
        output_psnr,
        input_ssim,
        output_ssim,
    })
}

/// Subbands tiled in a grid of three columns, level rows top to bottom, low-pass last.
///
/// Detail bands are shown as `128 + gain * value`; the low-pass band as is.
pub fn mosaic(pixels: &[u8], width: usize, height: usize, levels: usize, gain: f64) -> Result<Vec<u8>, String> {
    check_levels(width, height, levels)?;
    let bands = decompose(&image(pixels, width, height)?, levels, FilterRealization::Uwt2d).map_err(|e| e.to_string())?.into_bands();
    let cols = 3;
    let rows = levels + 1;
    let mw = cols * width;
    let mut out = vec![0u8; mw * rows * height];
    for (i, band) in bands.iter().enumerate() {
        let low_pass = i == bands.len() - 1;
        let (gr, gc) = (i / cols, i % cols);
        for r in 0..height {
            for c in 0..width {
                let v = band.get(r, c);
                let shown = if low_pass { v } else { 128.0 + gain * v };
                out[(gr * height + r) * mw + gc * width + c] = shown.round().clamp(0.0, 255.0) as u8;
            }
        }
    }
    Ok(out)
}

/// Estimated and true MSE after denoising at each depth `1..=max_levels`.
///
/// Returns `[risk_1, mse_1, risk_2, mse_2, ...]`; depths the image cannot take are skipped.
#[allow(clippy::too_many_arguments)]
pub fn risk_curve(
    clean: &[u8],
    width: usize,
    height: usize,
    distribution: &str,
    sigma: f64,
    seed: u64,
    max_levels: usize,
    realization: &str,
) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for levels in 1..=max_levels.min(MAX_LEVELS) {
        if check_levels(width, height, levels).is_err() {
            break;
        }
        let v = run_denoise(clean, width, height, distribution, sigma, seed, levels, realization)?;
        out.extend([v.risk, v.mse]);
    }
    Ok(out)
}

fn js(e: String) -> JsError {
    JsError::new(&e)
}

#[wasm_bindgen(js_name = scene)]
pub fn scene_js(kind: &str, width: usize, height: usize) -> Result<Vec<u8>, JsError> {
    scene(kind, width, height).map_err(js)
}

#[wasm_bindgen(js_name = denoise)]
#[allow(clippy::too_many_arguments)]
pub fn denoise_js(
    clean: &[u8],
    width: usize,
    height: usize,
    distribution: &str,
    sigma: f64,
    seed: u32,
    levels: usize,
    realization: &str,
) -> Result<DenoiseView, JsError> {
    run_denoise(clean, width, height, distribution, sigma, u64::from(seed), levels, realization).map_err(js)
}

#[wasm_bindgen(js_name = mosaic)]
pub fn mosaic_js(pixels: &[u8], width: usize, height: usize, levels: usize, gain: f64) -> Result<Vec<u8>, JsError> {
    mosaic(pixels, width, height, levels, gain).map_err(js)
}

#[wasm_bindgen(js_name = riskCurve)]
#[allow(clippy::too_many_arguments)]
pub fn risk_curve_js(
    clean: &[u8],
    width: usize,
    height: usize,
    distribution: &str,
    sigma: f64,
    seed: u32,
    max_levels: usize,
    realization: &str,
) -> Result<Vec<f64>, JsError> {
    risk_curve(clean, width, height, distribution, sigma, u64::from(seed), max_levels, realization).map_err(js)
}
