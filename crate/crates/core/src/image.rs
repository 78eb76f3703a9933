//! Image container and the additive noise observation model `y = x + w`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal, Open01, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A real-valued grayscale image stored in row-major order.
///
/// The sample vector is the row-vectorized view of the image: index `n`
/// addresses row `n / width`, column `n % width`.
#[derive(Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Image {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Image").field("width", &self.width).field("height", &self.height).finish_non_exhaustive()
    }
}

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(Error::InvalidDimensions { width, height, len: data.len() });
        }
        Ok(Self { width, height, data })
    }

    /// Builds an image from a row-vectorized sample vector.
    pub fn from_row_vector(width: usize, height: usize, samples: Vec<f64>) -> Result<Self> {
        Self::new(width, height, samples)
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut data = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self { width, height, data }
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self::from_fn(width, height, |_, _| value)
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn from_u8(width: usize, height: usize, pixels: &[u8]) -> Result<Self> {
        Self::new(width, height, pixels.iter().map(|&p| f64::from(p)).collect())
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    /// Pixel count `N`.
    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.width + col] = value;
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Row-major vector of length `N`.
    pub fn row_vectorize(&self) -> Vec<f64> {
        self.data.clone()
    }

    /// Maps a row-vectorized index to `(row, col)`.
    #[inline]
    pub fn index_to_coord(&self, n: usize) -> (usize, usize) {
        (n / self.width, n % self.width)
    }

    #[inline]
    pub fn coord_to_index(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        Image { width: self.width, height: self.height, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn scaled(&self, s: f64) -> Image {
        self.map(|v| v * s)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Mean squared difference against `other`.
    pub fn mse(&self, other: &Image) -> Result<f64> {
        if !self.same_shape(other) {
            return Err(shape_error(self, other));
        }
        let sum: f64 = self.data.iter().zip(&other.data).map(|(a, b)| (a - b) * (a - b)).sum();
        Ok(sum / self.data.len() as f64)
    }

    /// Largest absolute per-pixel difference.
    pub fn max_abs_diff(&self, other: &Image) -> Result<f64> {
        if !self.same_shape(other) {
            return Err(shape_error(self, other));
        }
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }

    /// Rounds to the nearest integer (ties away from zero) and clips to `[0, 255]`.
    pub fn quantize_8bit(&self) -> Image {
        self.map(|v| v.round().clamp(0.0, 255.0))
    }

    pub fn to_u8(&self) -> Vec<u8> {
        self.data.iter().map(|&v| v.round().clamp(0.0, 255.0) as u8).collect()
    }

    /// True when every sample is an integer in `[0, 255]`.
    pub fn is_8bit(&self) -> bool {
        self.data.iter().all(|&v| v.fract() == 0.0 && (0.0..=255.0).contains(&v))
    }

    /// Returns `y = x + w` with `w` drawn from `model`.
    ///
    /// Row `r` draws from its own ChaCha8 stream (`seed`, stream `r`), so the
    /// result does not depend on the order rows are generated in.
    pub fn add_noise(&self, model: &NoiseModel) -> Result<Image> {
        model.validate()?;
        let mut out = self.clone();
        if model.sigma == 0.0 {
            return Ok(out);
        }
        let width = self.width;
        let fill = |row: usize, dst: &mut [f64]| {
            let mut rng = model.row_rng(row);
            for v in dst.iter_mut() {
                *v += model.sample(&mut rng);
            }
        };
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            out.data.par_chunks_mut(width).enumerate().for_each(|(r, row)| fill(r, row));
        }
        #[cfg(not(feature = "parallel"))]
        {
            out.data.chunks_mut(width).enumerate().for_each(|(r, row)| fill(r, row));
        }
        Ok(out)
    }
}

fn shape_error(a: &Image, b: &Image) -> Error {
    Error::ShapeMismatch(format!("{}x{} vs {}x{}", a.width, a.height, b.width, b.height))
}

/// Noise distributions, each parameterized by its standard deviation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distribution {
    Gaussian,
    /// Uniform on `[-sigma * sqrt(3), sigma * sqrt(3)]`.
    Uniform,
    /// Laplacian with scale `b = sigma / sqrt(2)`.
    Laplacian,
}

impl Distribution {
    pub const ALL: [Distribution; 3] = [Distribution::Gaussian, Distribution::Uniform, Distribution::Laplacian];

    pub fn name(self) -> &'static str {
        match self {
            Distribution::Gaussian => "gaussian",
            Distribution::Uniform => "uniform",
            Distribution::Laplacian => "laplacian",
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(Distribution::Gaussian),
            "uniform" => Ok(Distribution::Uniform),
            "laplacian" | "laplace" => Ok(Distribution::Laplacian),
            _ => Err(Error::UnsupportedDistribution(s.to_string())),
        }
    }
}

/// Zero-mean additive noise with a given standard deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub distribution: Distribution,
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn new(distribution: Distribution, sigma: f64, seed: u64) -> Self {
        Self { distribution, sigma, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("noise sigma must be finite and >= 0, got {}", self.sigma)));
        }
        Ok(())
    }

    pub fn variance(&self) -> f64 {
        self.sigma * self.sigma
    }

    /// Generator for pixel row `row`.
    pub fn row_rng(&self, row: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(row as u64);
        rng
    }

    /// Draws one noise sample.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let sigma = self.sigma;
        if sigma == 0.0 {
            return 0.0;
        }
        match self.distribution {
            Distribution::Gaussian => Normal::new(0.0, sigma).expect("sigma validated").sample(rng),
            Distribution::Uniform => {
                let a = sigma * 3f64.sqrt();
                Uniform::new_inclusive(-a, a).expect("finite bounds").sample(rng)
            }
            Distribution::Laplacian => {
                let b = sigma / std::f64::consts::SQRT_2;
                let u: f64 = Open01.sample(rng);
                let u = u - 0.5;
                -b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
        }
    }

    /// `count` consecutive samples from stream 0; used for moment checks.
    pub fn samples(&self, count: usize) -> Vec<f64> {
        let mut rng = self.row_rng(0);
        (0..count).map(|_| self.sample(&mut rng)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moments(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        (mean, var)
    }

    #[test]
    fn row_vectorize_is_row_major() {
        let img = Image::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(img.row_vectorize(), vec![1.0, 2.0, 3.0, 4.0]);
        let single = Image::new(1, 1, vec![7.0]).unwrap();
        assert_eq!(single.row_vectorize(), vec![7.0]);
    }

    #[test]
    fn three_by_two_index_four_is_row_two_col_zero() {
        // width 2, height 3: indices 0 1 / 2 3 / 4 5
        let img = Image::from_fn(2, 3, |r, c| (10 * r + c) as f64);
        let v = img.row_vectorize();
        assert_eq!(v[4], img.get(2, 0));
        assert_eq!(img.index_to_coord(4), (2, 0));
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(Image::new(0, 3, vec![]).is_err());
        assert!(Image::new(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn zero_sigma_is_identity() {
        let img = Image::from_fn(8, 8, |r, c| (r * c) as f64);
        for d in Distribution::ALL {
            assert_eq!(img.add_noise(&NoiseModel::new(d, 0.0, 3)).unwrap(), img);
        }
    }

    #[test]
    fn noise_is_reproducible() {
        let img = Image::filled(16, 16, 100.0);
        let m = NoiseModel::new(Distribution::Laplacian, 5.0, 99);
        assert_eq!(img.add_noise(&m).unwrap(), img.add_noise(&m).unwrap());
        let other = NoiseModel { seed: 100, ..m };
        assert_ne!(img.add_noise(&m).unwrap(), img.add_noise(&other).unwrap());
    }

    #[test]
    fn unknown_distribution_tag_is_rejected() {
        assert!(matches!("poisson".parse::<Distribution>(), Err(Error::UnsupportedDistribution(_))));
        assert_eq!("Gaussian".parse::<Distribution>().unwrap(), Distribution::Gaussian);
    }

    #[test]
    fn negative_sigma_is_rejected() {
        let img = Image::zeros(2, 2);
        assert!(img.add_noise(&NoiseModel::new(Distribution::Gaussian, -1.0, 0)).is_err());
    }

    #[test]
    fn second_moment_matches_sigma_for_every_distribution() {
        for d in Distribution::ALL {
            let m = NoiseModel::new(d, 25.0, 11);
            let (mean, var) = moments(&m.samples(1_000_000));
            assert!(mean.abs() < 0.25, "{d}: mean {mean}");
            assert!((var / 625.0 - 1.0).abs() < 0.02, "{d}: variance {var}");
        }
    }

    #[test]
    fn uniform_support_is_bounded() {
        let m = NoiseModel::new(Distribution::Uniform, 2.0, 1);
        let bound = 2.0 * 3f64.sqrt();
        assert!(m.samples(100_000).iter().all(|v| v.abs() <= bound));
    }

    #[test]
    fn constant_image_noise_variance() {
        let img = Image::filled(512, 512, 128.0);
        let noisy = img.add_noise(&NoiseModel::new(Distribution::Gaussian, 25.0, 2024)).unwrap();
        let (mean, var) = moments(noisy.data());
        assert!((mean - 128.0).abs() < 0.2);
        assert!((var / 625.0 - 1.0).abs() < 0.02, "variance {var}");
    }

    #[test]
    fn quantize_rounds_and_clips() {
        let img = Image::new(4, 1, vec![-3.2, 12.5, 254.6, 300.0]).unwrap();
        assert_eq!(img.quantize_8bit().data(), &[0.0, 13.0, 255.0, 255.0]);
        assert!(img.quantize_8bit().is_8bit());
    }
}
