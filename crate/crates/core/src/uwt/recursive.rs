//! Combined filters evaluated by running-sum recursions.
//!
//! The cost per sample is independent of the level: a box sum slides with one
//! subtraction and one addition, the combined wavelet filter with three
//! additions.

use super::kernel::{filter_len, Branch};
use super::ops::{along_cols, rows_box, rows_wavelet, scale_in_place, AddTally};
use super::{Band, BandKind, Realization};
use crate::image::Image;

fn image(w: usize, h: usize, data: Vec<f64>) -> Image {
    Image::new(w, h, data).expect("plane keeps its shape")
}

fn rows_branch(src: &[f64], w: usize, h: usize, level: usize, branch: Branch, tally: &mut AddTally) -> Vec<f64> {
    let len = filter_len(level);
    match branch {
        Branch::Refinement => rows_box(src, w, h, len, level, tally),
        Branch::Wavelet => rows_wavelet(src, w, h, len, level, tally),
    }
}

fn cols_branch(src: &[f64], w: usize, h: usize, level: usize, branch: Branch, tally: &mut AddTally) -> Vec<f64> {
    along_cols(src, w, h, |t, tw, th| rows_branch(t, tw, th, level, branch, tally))
}

/// Separable recursions: rows then columns.
pub(crate) struct Recursive1d;

impl Realization for Recursive1d {
    fn decompose(&self, img: &Image, levels: usize, tally: &mut AddTally) -> Vec<Image> {
        let (w, h) = (img.width(), img.height());
        let mut out = Vec::with_capacity(3 * levels + 1);
        let mut ll = Vec::new();
        for level in 1..=levels {
            let norm = 1.0 / (filter_len(level) * filter_len(level)) as f64;
            let row_h = rows_branch(img.data(), w, h, level, Branch::Refinement, tally);
            let row_g = rows_branch(img.data(), w, h, level, Branch::Wavelet, tally);
            let mut bands = [
                cols_branch(&row_g, w, h, level, Branch::Refinement, tally),
                cols_branch(&row_h, w, h, level, Branch::Wavelet, tally),
                cols_branch(&row_g, w, h, level, Branch::Wavelet, tally),
                cols_branch(&row_h, w, h, level, Branch::Refinement, tally),
            ];
            for b in &mut bands {
                scale_in_place(b, norm);
            }
            tally.outputs(level, 4 * (w * h) as u64);
            let [lh, hl, hh, l] = bands;
            ll = l;
            out.extend([lh, hl, hh].map(|d| image(w, h, d)));
        }
        out.push(image(w, h, ll));
        out
    }

    fn band_filter(&self, img: &Image, band: Band, tally: &mut AddTally) -> Image {
        let (w, h) = (img.width(), img.height());
        let (vb, hb) = band.kind.branches();
        let rows = rows_branch(img.data(), w, h, band.level, hb, tally);
        let mut out = cols_branch(&rows, w, h, band.level, vb, tally);
        let len = filter_len(band.level);
        scale_in_place(&mut out, 1.0 / (len * len) as f64);
        tally.outputs(band.level, (w * h) as u64);
        image(w, h, out)
    }
}

/// `L/2 x L/2` box sums `S` combined from four shifted copies:
/// `D = S(r, c)`, `B = S(r, c - L/2)`, `C = S(r - L/2, c)`, `A = S(r - L/2, c - L/2)`.
pub(crate) struct Recursive2d;

impl Recursive2d {
    fn box_sums(src: &[f64], w: usize, h: usize, level: usize, tally: &mut AddTally) -> Vec<f64> {
        let s = filter_len(level) / 2;
        let rows = rows_box(src, w, h, s, level, tally);
        along_cols(&rows, w, h, |t, tw, th| rows_box(t, tw, th, s, level, tally))
    }

    /// Combines shifted box sums into the requested bands, three additions each.
    fn combine(sums: &[f64], w: usize, h: usize, level: usize, kinds: &[BandKind], tally: &mut AddTally) -> Vec<Vec<f64>> {
        let s = filter_len(level) / 2;
        let norm = 1.0 / (4 * s * s) as f64;
        let mut out: Vec<Vec<f64>> = kinds.iter().map(|_| vec![0.0; w * h]).collect();
        for r in 0..h {
            let rs = (r + h - s) % h;
            for c in 0..w {
                let cs = (c + w - s) % w;
                let d = sums[r * w + c];
                let b = sums[r * w + cs];
                let cc = sums[rs * w + c];
                let a = sums[rs * w + cs];
                for (k, plane) in kinds.iter().zip(out.iter_mut()) {
                    plane[r * w + c] = norm
                        * match k {
                            BandKind::LL => d + b + cc + a,
                            BandKind::LH => -d + b - cc + a,
                            BandKind::HL => -d - b + cc + a,
                            BandKind::HH => d - b - cc + a,
                        };
                }
            }
        }
        tally.steady(level, (3 * kinds.len() * w * h) as u64);
        tally.outputs(level, (kinds.len() * w * h) as u64);
        out
    }
}

impl Realization for Recursive2d {
    fn decompose(&self, img: &Image, levels: usize, tally: &mut AddTally) -> Vec<Image> {
        let (w, h) = (img.width(), img.height());
        let mut out = Vec::with_capacity(3 * levels + 1);
        let kinds = [BandKind::LH, BandKind::HL, BandKind::HH, BandKind::LL];
        let mut ll = Vec::new();
        for level in 1..=levels {
            let sums = Self::box_sums(img.data(), w, h, level, tally);
            let [lh, hl, hh, l]: [Vec<f64>; 4] = Self::combine(&sums, w, h, level, &kinds, tally).try_into().expect("four bands");
            ll = l;
            out.extend([lh, hl, hh].map(|d| image(w, h, d)));
        }
        out.push(image(w, h, ll));
        out
    }

    fn band_filter(&self, img: &Image, band: Band, tally: &mut AddTally) -> Image {
        let (w, h) = (img.width(), img.height());
        let sums = Self::box_sums(img.data(), w, h, band.level, tally);
        let out = Self::combine(&sums, w, h, band.level, &[band.kind], tally).pop().expect("one band");
        image(w, h, out)
    }
}
