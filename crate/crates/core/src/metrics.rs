//! Image quality metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;

/// Peak value used by [`psnr`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Peak {
    /// The 8-bit dynamic range, 255.
    #[default]
    Dynamic8Bit,
    Fixed(f64),
    /// `max` of the reference image.
    ReferenceMax,
    /// `max` of the image under test.
    TestMax,
}

impl Peak {
    fn value(self, reference: &Image, test: &Image) -> f64 {
        match self {
            Peak::Dynamic8Bit => 255.0,
            Peak::Fixed(v) => v,
            Peak::ReferenceMax => reference.max(),
            Peak::TestMax => test.max(),
        }
    }
}

/// `10 log10(peak^2 / MSE)` in dB; infinite for identical images.
pub fn psnr(reference: &Image, test: &Image, peak: Peak) -> Result<f64> {
    let mse = reference.mse(test)?;
    let p = peak.value(reference, test);
    if p.is_nan() || p <= 0.0 {
        return Err(Error::InvalidParameter(format!("PSNR peak {p} must be positive")));
    }
    Ok(if mse == 0.0 { f64::INFINITY } else { 10.0 * (p * p / mse).log10() })
}

/// Local statistics window for [`ssim`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SsimWindow {
    /// Normalized `size x size` Gaussian; only fully covered positions are scored.
    Gaussian { size: usize, sigma: f64 },
    /// Normalized `size x size` box.
    Uniform { size: usize },
    /// Single window over the whole image.
    Global,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SsimConfig {
    pub window: SsimWindow,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimConfig {
    fn default() -> Self {
        Self { window: SsimWindow::Gaussian { size: 11, sigma: 1.5 }, k1: 0.01, k2: 0.03, dynamic_range: 255.0 }
    }
}

impl SsimConfig {
    pub fn global() -> Self {
        Self { window: SsimWindow::Global, ..Self::default() }
    }
}

fn ssim_term(mx: f64, my: f64, vx: f64, vy: f64, cxy: f64, c1: f64, c2: f64) -> f64 {
    ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
}

fn window_1d(window: SsimWindow) -> Option<Vec<f64>> {
    let w: Vec<f64> = match window {
        SsimWindow::Global => return None,
        SsimWindow::Uniform { size } => vec![1.0; size],
        SsimWindow::Gaussian { size, sigma } => {
            let c = (size as f64 - 1.0) / 2.0;
            (0..size).map(|i| (-((i as f64 - c).powi(2)) / (2.0 * sigma * sigma)).exp()).collect()
        }
    };
    let s: f64 = w.iter().sum();
    Some(w.into_iter().map(|v| v / s).collect())
}

/// Separable correlation, keeping only positions where the window fits.
fn filter_valid(src: &[f64], w: usize, h: usize, k: &[f64]) -> Vec<f64> {
    let n = k.len();
    let (ow, oh) = (w + 1 - n, h + 1 - n);
    let mut rows = vec![0.0; ow * h];
    for r in 0..h {
        for c in 0..ow {
            rows[r * ow + c] = k.iter().enumerate().map(|(i, t)| t * src[r * w + c + i]).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for r in 0..oh {
        for c in 0..ow {
            out[r * ow + c] = k.iter().enumerate().map(|(i, t)| t * rows[(r + i) * ow + c]).sum();
        }
    }
    out
}

/// Mean structural similarity.
pub fn ssim(reference: &Image, test: &Image, config: &SsimConfig) -> Result<f64> {
    if !reference.same_shape(test) {
        return Err(Error::ShapeMismatch(format!("{}x{} vs {}x{}", reference.width(), reference.height(), test.width(), test.height())));
    }
    let c1 = (config.k1 * config.dynamic_range).powi(2);
    let c2 = (config.k2 * config.dynamic_range).powi(2);
    let (x, y) = (reference.data(), test.data());
    let Some(k) = window_1d(config.window) else {
        let n = x.len() as f64;
        let (mx, my) = (reference.mean(), test.mean());
        // population moments, as in the windowed form
        let vx = x.iter().map(|v| (v - mx).powi(2)).sum::<f64>() / n;
        let vy = y.iter().map(|v| (v - my).powi(2)).sum::<f64>() / n;
        let cxy = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / n;
        return Ok(ssim_term(mx, my, vx, vy, cxy, c1, c2));
    };
    let (w, h) = (reference.width(), reference.height());
    if k.is_empty() || k.len() > w || k.len() > h {
        return Err(Error::InvalidParameter(format!("SSIM window of {} does not fit {w}x{h}", k.len())));
    }
    let prod = |f: &dyn Fn(f64, f64) -> f64| -> Vec<f64> { x.iter().zip(y).map(|(a, b)| f(*a, *b)).collect() };
    let mx = filter_valid(x, w, h, &k);
    let my = filter_valid(y, w, h, &k);
    let sxx = filter_valid(&prod(&|a, _| a * a), w, h, &k);
    let syy = filter_valid(&prod(&|_, b| b * b), w, h, &k);
    let sxy = filter_valid(&prod(&|a, b| a * b), w, h, &k);
    let total: f64 = (0..mx.len())
        .map(|i| {
            let (a, b) = (mx[i], my[i]);
            ssim_term(a, b, sxx[i] - a * a, syy[i] - b * b, sxy[i] - a * b, c1, c2)
        })
        .sum();
    Ok(total / mx.len() as f64)
}
