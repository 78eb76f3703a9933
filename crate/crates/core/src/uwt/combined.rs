//! Direct convolution with the combined `L`-tap filters.

use super::kernel::{combined_1d, HaarKernel, KernelForm};
use super::ops::{along_cols, plane_dense, rows_dense, AddTally};
use super::{band_layout, Band, BandKind, Realization};
use crate::image::Image;

fn image(w: usize, h: usize, data: Vec<f64>) -> Image {
    Image::new(w, h, data).expect("plane keeps its shape")
}

/// Every band of every level filtered straight from the input; the
/// approximation of each level is computed too so per-level costs stay uniform.
fn decompose_with(img: &Image, levels: usize, tally: &mut AddTally, f: &dyn Fn(&Image, Band, &mut AddTally) -> Image) -> Vec<Image> {
    let mut out = Vec::with_capacity(3 * levels + 1);
    for band in band_layout(levels) {
        if band.kind == BandKind::LL {
            continue;
        }
        out.push(f(img, band, tally));
        if band.kind == BandKind::HH {
            let ll = f(img, Band { level: band.level, kind: BandKind::LL }, tally);
            if band.level == levels {
                out.push(ll);
            }
        }
    }
    out
}

/// Separable: one row and one column pass of `L` taps each.
pub(crate) struct Combined1d;

impl Combined1d {
    fn filter(img: &Image, band: Band, tally: &mut AddTally) -> Image {
        let (w, h) = (img.width(), img.height());
        let (vb, hb) = band.kind.branches();
        let rows = rows_dense(img.data(), w, h, &combined_1d(band.level, hb), band.level, tally);
        let out = along_cols(&rows, w, h, |t, tw, th| rows_dense(t, tw, th, &combined_1d(band.level, vb), band.level, tally));
        tally.outputs(band.level, (w * h) as u64);
        image(w, h, out)
    }
}

impl Realization for Combined1d {
    /// Shares the two row passes between the four bands of a level.
    fn decompose(&self, img: &Image, levels: usize, tally: &mut AddTally) -> Vec<Image> {
        let (w, h) = (img.width(), img.height());
        let mut out = Vec::with_capacity(3 * levels + 1);
        let mut ll = Vec::new();
        for level in 1..=levels {
            let hk = combined_1d(level, super::Branch::Refinement);
            let gk = combined_1d(level, super::Branch::Wavelet);
            let row_h = rows_dense(img.data(), w, h, &hk, level, tally);
            let row_g = rows_dense(img.data(), w, h, &gk, level, tally);
            let mut col = |src: &[f64], k: &[f64]| along_cols(src, w, h, |t, tw, th| rows_dense(t, tw, th, k, level, tally));
            let lh = col(&row_g, &hk);
            let hl = col(&row_h, &gk);
            let hh = col(&row_g, &gk);
            ll = col(&row_h, &hk);
            tally.outputs(level, 4 * (w * h) as u64);
            out.extend([lh, hl, hh].map(|d| image(w, h, d)));
        }
        out.push(image(w, h, ll));
        out
    }

    fn band_filter(&self, img: &Image, band: Band, tally: &mut AddTally) -> Image {
        Self::filter(img, band, tally)
    }
}

/// Non-separable: one `L x L` kernel per band.
pub(crate) struct Combined2d;

impl Combined2d {
    fn filter(img: &Image, band: Band, tally: &mut AddTally) -> Image {
        let (w, h) = (img.width(), img.height());
        let k = HaarKernel::analysis(band.level, band.kind, KernelForm::Combined);
        let out = plane_dense(img.data(), w, h, &k.taps, k.size, band.level, tally);
        tally.outputs(band.level, (w * h) as u64);
        image(w, h, out)
    }
}

impl Realization for Combined2d {
    fn decompose(&self, img: &Image, levels: usize, tally: &mut AddTally) -> Vec<Image> {
        decompose_with(img, levels, tally, &Self::filter)
    }

    fn band_filter(&self, img: &Image, band: Band, tally: &mut AddTally) -> Image {
        Self::filter(img, band, tally)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn costs_match_tap_counts() {
        let img = Image::zeros(16, 16);
        let mut t = AddTally::new();
        Combined1d.decompose(&img, 3, &mut t);
        for level in 1..=3u32 {
            let len = 2f64.powi(level as i32);
            assert_eq!(t.per_output(level as usize), Some(6.0 * (len - 1.0) / 4.0));
        }
        let mut t = AddTally::new();
        Combined2d.decompose(&img, 2, &mut t);
        assert_eq!(t.per_output(2), Some(15.0));
    }
}
