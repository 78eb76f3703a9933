//! Cascades of individual (two-tap per axis) Haar filters.

use super::kernel::{filter_len, Branch};
use super::ops::{along_cols, plane_sparse, reverse2d, rows_sparse, AddTally};
use super::{Band, BandKind, Realization};
use crate::image::Image;

fn sparse_1d(level: usize, branch: Branch) -> [(usize, f64); 2] {
    let s = filter_len(level) / 2;
    match branch {
        Branch::Refinement => [(0, 0.5), (s, 0.5)],
        Branch::Wavelet => [(0, -0.5), (s, 0.5)],
    }
}

fn sparse_2d(level: usize, kind: BandKind) -> Vec<(usize, usize, f64)> {
    let (vb, hb) = kind.branches();
    let mut taps = Vec::with_capacity(4);
    for (a, va) in sparse_1d(level, vb) {
        for (b, hbv) in sparse_1d(level, hb) {
            taps.push((a, b, va * hbv));
        }
    }
    taps
}

fn image(w: usize, h: usize, data: Vec<f64>) -> Image {
    Image::new(w, h, data).expect("plane keeps its shape")
}

/// Row pass then column pass per level.
pub(crate) struct Individual1d;

impl Individual1d {
    fn separable(src: &[f64], w: usize, h: usize, level: usize, kind: BandKind, tally: &mut AddTally) -> Vec<f64> {
        let (vb, hb) = kind.branches();
        let rows = rows_sparse(src, w, h, &sparse_1d(level, hb), level, tally);
        along_cols(&rows, w, h, |t, tw, th| rows_sparse(t, tw, th, &sparse_1d(level, vb), level, tally))
    }
}

impl Realization for Individual1d {
    fn decompose(&self, img: &Image, levels: usize, tally: &mut AddTally) -> Vec<Image> {
        let (w, h) = (img.width(), img.height());
        let mut approx = img.data().to_vec();
        let mut out = Vec::with_capacity(3 * levels + 1);
        for level in 1..=levels {
            let row_h = rows_sparse(&approx, w, h, &sparse_1d(level, Branch::Refinement), level, tally);
            let row_g = rows_sparse(&approx, w, h, &sparse_1d(level, Branch::Wavelet), level, tally);
            let col = |src: &[f64], branch: Branch, tally: &mut AddTally| {
                along_cols(src, w, h, |t, tw, th| rows_sparse(t, tw, th, &sparse_1d(level, branch), level, tally))
            };
            let lh = col(&row_g, Branch::Refinement, tally);
            let hl = col(&row_h, Branch::Wavelet, tally);
            let hh = col(&row_g, Branch::Wavelet, tally);
            approx = col(&row_h, Branch::Refinement, tally);
            tally.outputs(level, 4 * (w * h) as u64);
            out.extend([lh, hl, hh].map(|d| image(w, h, d)));
        }
        out.push(image(w, h, approx));
        out
    }

    fn band_filter(&self, img: &Image, band: Band, tally: &mut AddTally) -> Image {
        let (w, h) = (img.width(), img.height());
        let mut cur = img.data().to_vec();
        for level in 1..band.level {
            cur = Self::separable(&cur, w, h, level, BandKind::LL, tally);
        }
        let out = Self::separable(&cur, w, h, band.level, band.kind, tally);
        tally.outputs(band.level, (w * h) as u64);
        image(w, h, out)
    }
}

/// Four-tap 2D kernels; the four bands of a level share the sums and
/// differences of the diagonal pairs `(A, D)` and `(B, C)`.
pub(crate) struct Individual2d;

impl Realization for Individual2d {
    fn decompose(&self, img: &Image, levels: usize, tally: &mut AddTally) -> Vec<Image> {
        let (w, h) = (img.width(), img.height());
        let mut approx = img.data().to_vec();
        let mut out = Vec::with_capacity(3 * levels + 1);
        for level in 1..=levels {
            let s = filter_len(level) / 2;
            let n = w * h;
            let (mut lh, mut hl, mut hh, mut ll) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
            for r in 0..h {
                let rs = (r + h - s) % h;
                for c in 0..w {
                    let cs = (c + w - s) % w;
                    let d = approx[r * w + c];
                    let b = approx[r * w + cs];
                    let cc = approx[rs * w + c];
                    let a = approx[rs * w + cs];
                    let (p1, m1, p2, m2) = (a + d, a - d, b + cc, b - cc);
                    let i = r * w + c;
                    ll[i] = 0.25 * (p1 + p2);
                    hh[i] = 0.25 * (p1 - p2);
                    lh[i] = 0.25 * (m1 + m2);
                    hl[i] = 0.25 * (m1 - m2);
                }
            }
            tally.steady(level, 8 * n as u64);
            tally.outputs(level, 4 * n as u64);
            out.extend([lh, hl, hh].map(|d| image(w, h, d)));
            approx = ll;
        }
        out.push(image(w, h, approx));
        out
    }

    fn band_filter(&self, img: &Image, band: Band, tally: &mut AddTally) -> Image {
        let (w, h) = (img.width(), img.height());
        let mut cur = img.data().to_vec();
        for level in 1..band.level {
            cur = plane_sparse(&cur, w, h, &sparse_2d(level, BandKind::LL), level, tally);
        }
        let out = plane_sparse(&cur, w, h, &sparse_2d(band.level, band.kind), band.level, tally);
        tally.outputs(band.level, (w * h) as u64);
        image(w, h, out)
    }
}

fn accumulate(acc: &mut [f64], v: &[f64]) {
    acc.iter_mut().zip(v).for_each(|(a, b)| *a += b);
}

/// Level-by-level inverse transform: each level merges its three details and
/// the approximation into the approximation one level down. Runs on
/// circularly reversed planes, so the causal filters act as the flipped
/// synthesis filters. Only filter additions are tallied, not branch sums.
pub(crate) fn inverse(bands: &[Image], levels: usize, two_d: bool, tally: &mut AddTally) -> Vec<f64> {
    let (w, h) = (bands[0].width(), bands[0].height());
    let rev = |i: usize| reverse2d(bands[i].data(), w, h);
    let mut approx = rev(3 * levels);
    for level in (1..=levels).rev() {
        let (lh, hl, hh) = (rev(3 * (level - 1)), rev(3 * (level - 1) + 1), rev(3 * (level - 1) + 2));
        let next = if two_d {
            let mut acc = vec![0.0; w * h];
            for (kind, plane) in [(BandKind::LL, &approx), (BandKind::LH, &lh), (BandKind::HL, &hl), (BandKind::HH, &hh)] {
                accumulate(&mut acc, &plane_sparse(plane, w, h, &sparse_2d(level, kind), level, tally));
            }
            acc
        } else {
            let col = |src: &[f64], branch: Branch, tally: &mut AddTally| {
                along_cols(src, w, h, |t, tw, th| rows_sparse(t, tw, th, &sparse_1d(level, branch), level, tally))
            };
            // pair the bands that share a horizontal branch
            let mut low = col(&approx, Branch::Refinement, tally);
            accumulate(&mut low, &col(&hl, Branch::Wavelet, tally));
            let mut high = col(&lh, Branch::Refinement, tally);
            accumulate(&mut high, &col(&hh, Branch::Wavelet, tally));
            let mut acc = rows_sparse(&low, w, h, &sparse_1d(level, Branch::Refinement), level, tally);
            accumulate(&mut acc, &rows_sparse(&high, w, h, &sparse_1d(level, Branch::Wavelet), level, tally));
            acc
        };
        tally.outputs(level, (w * h) as u64);
        approx = next;
    }
    reverse2d(&approx, w, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uwt::kernel::{HaarKernel, KernelForm};

    #[test]
    fn sparse_taps_match_kernel() {
        for level in 1..=3 {
            for kind in [BandKind::LH, BandKind::HL, BandKind::HH, BandKind::LL] {
                let k = HaarKernel::analysis(level, kind, KernelForm::Individual);
                for (a, b, t) in sparse_2d(level, kind) {
                    assert_eq!(k.at(a, b), t);
                }
            }
        }
    }

    #[test]
    fn two_d_costs_two_additions_per_output() {
        let img = Image::zeros(32, 32);
        let mut t = AddTally::new();
        Individual2d.decompose(&img, 3, &mut t);
        for level in 1..=3 {
            assert_eq!(t.per_output(level), Some(2.0));
        }
        let mut t = AddTally::new();
        Individual1d.decompose(&img, 3, &mut t);
        assert_eq!(t.per_output(2), Some(1.5));
    }
}
