//! Dense matrix reference for small images.
//!
//! Every band operator is materialized as an `N x N` matrix acting on the
//! row-vectorized image, built from 1D circulants of the individual taps. The
//! synthesis matrices are built from the flipped taps directly, not by
//! transposition.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::uwt::kernel::{individual_1d, Branch};
use crate::uwt::{band_layout, check_dimensions, Band};

pub const MAX_PIXELS: usize = 4096;

/// `y(i) = sum_k f[k] x(i - k)` on a circle of `n`.
fn causal_circulant(taps: &[f64], n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for (k, &t) in taps.iter().enumerate() {
            m[(i, (i + n * taps.len() - k) % n)] += t;
        }
    }
    m
}

/// `y(i) = sum_k f[k] x(i + k)` on a circle of `n`.
fn anticausal_circulant(taps: &[f64], n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for (k, &t) in taps.iter().enumerate() {
            m[(i, (i + k) % n)] += t;
        }
    }
    m
}

/// Analysis cascade of one branch: refinement filters of levels `1..level`, then `branch` at `level`.
fn analysis_1d(level: usize, branch: Branch, n: usize) -> DMatrix<f64> {
    let mut m = causal_circulant(&individual_1d(level, branch), n);
    for j in (1..level).rev() {
        m *= causal_circulant(&individual_1d(j, Branch::Refinement), n);
    }
    m
}

/// Synthesis cascade: the flipped filters in reverse order.
fn synthesis_1d(level: usize, branch: Branch, n: usize) -> DMatrix<f64> {
    let mut m = anticausal_circulant(&individual_1d(level, branch), n);
    for j in (1..level).rev() {
        m = anticausal_circulant(&individual_1d(j, Branch::Refinement), n) * m;
    }
    m
}

/// `A (x) B` with rows and columns indexed `r * width + c`.
fn kron(v: &DMatrix<f64>, h: &DMatrix<f64>) -> DMatrix<f64> {
    v.kronecker(h)
}

pub struct DenseOperators {
    pub width: usize,
    pub height: usize,
    pub bands: Vec<Band>,
    /// `D_i`.
    pub analysis: Vec<DMatrix<f64>>,
    /// `R_i`.
    pub synthesis: Vec<DMatrix<f64>>,
}

impl DenseOperators {
    /// `H_i = R_i D_i`.
    pub fn cascade(&self, i: usize) -> DMatrix<f64> {
        &self.synthesis[i] * &self.analysis[i]
    }

    pub fn trace(&self, i: usize) -> f64 {
        self.cascade(i).trace()
    }

    fn vec(img: &Image) -> DVector<f64> {
        DVector::from_column_slice(img.data())
    }

    fn image(&self, v: DVector<f64>) -> Image {
        Image::new(self.width, self.height, v.as_slice().to_vec()).expect("operator preserves size")
    }

    pub fn decompose(&self, img: &Image) -> Vec<Image> {
        let y = Self::vec(img);
        self.analysis.iter().map(|d| self.image(d * &y)).collect()
    }

    pub fn synthesize(&self, img: &Image) -> Vec<Image> {
        let y = Self::vec(img);
        (0..self.bands.len()).map(|i| self.image(self.cascade(i) * &y)).collect()
    }
}

pub fn build_dense(width: usize, height: usize, levels: usize) -> Result<DenseOperators> {
    check_dimensions(width, height, levels)?;
    let n = width * height;
    if n > MAX_PIXELS {
        return Err(Error::OracleTooLarge { max: MAX_PIXELS, actual: n });
    }
    let bands = band_layout(levels);
    let mut analysis = Vec::with_capacity(bands.len());
    let mut synthesis = Vec::with_capacity(bands.len());
    for band in &bands {
        let (vb, hb) = band.kind.branches();
        analysis.push(kron(&analysis_1d(band.level, vb, height), &analysis_1d(band.level, hb, width)));
        synthesis.push(kron(&synthesis_1d(band.level, vb, height), &synthesis_1d(band.level, hb, width)));
    }
    Ok(DenseOperators { width, height, bands, analysis, synthesis })
}

/// Dense GenRE denoiser: `alpha = (Psi^T Psi)^-1 (Psi^T y - sigma^2 tr(H))`.
pub fn dense_denoise(noisy: &Image, sigma: f64, levels: usize) -> Result<(Image, Vec<f64>)> {
    let ops = build_dense(noisy.width(), noisy.height(), levels)?;
    let y = DenseOperators::vec(noisy);
    let k = ops.bands.len();
    let mut psi = DMatrix::zeros(y.len(), k);
    for i in 0..k {
        psi.set_column(i, &(ops.cascade(i) * &y));
    }
    let q = psi.transpose() * &psi;
    let mut c = psi.transpose() * &y;
    for i in 0..k {
        c[i] -= sigma * sigma * ops.trace(i);
    }
    let alpha = q.lu().solve(&c).ok_or(Error::IllConditioned { condition: f64::INFINITY })?;
    let out = ops.image(&psi * &alpha);
    Ok((out, alpha.as_slice().to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthesis_is_transpose_of_analysis() {
        let ops = build_dense(8, 4, 2).unwrap();
        for i in 0..ops.bands.len() {
            assert!((&ops.synthesis[i] - ops.analysis[i].transpose()).amax() < 1e-15);
        }
        let sum: DMatrix<f64> = (0..ops.bands.len()).map(|i| ops.cascade(i)).fold(DMatrix::zeros(32, 32), |a, b| a + b);
        assert!((sum - DMatrix::identity(32, 32)).amax() < 1e-12);
    }

    #[test]
    fn size_cap() {
        assert!(matches!(build_dense(128, 64, 1), Err(Error::OracleTooLarge { .. })));
    }
}
