//! Haar filter taps.
//!
//! All filters are causal: a 1D filter `f` maps `x` to `y(n) = sum_k f[k] x(n - k)`
//! (indices modulo the signal length). Synthesis filters are the analysis
//! filters flipped, i.e. applied as `y(n) = sum_k f[k] x(n + k)`, which makes the
//! synthesis operator of every band the transpose of its analysis operator.
//!
//! Level `j` uses length `L = 2^j`. Individual filters are the level-one pair
//! `h = [1, 1] / 2`, `g = [-1, 1] / 2` upsampled by `2^(j-1)`; combined filters
//! are the full cascade of one branch: `h'_j = [1; L] / L` and
//! `g'_j = [-1; L/2] ++ [1; L/2] / L`.

use serde::{Deserialize, Serialize};

use super::BandKind;

/// One-dimensional Haar branch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    /// Refinement (low-pass) filter `h`.
    Refinement,
    /// Wavelet (high-pass) filter `g`.
    Wavelet,
}

/// Whether a kernel is one stage of the cascade or the whole branch folded into one filter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KernelForm {
    Individual,
    Combined,
}

/// Filter length `L = 2^level`.
#[inline]
pub fn filter_len(level: usize) -> usize {
    1usize << level
}

/// Level-`level` individual taps, length `L` with `L/2 - 1` zeros between the two non-zero taps.
pub fn individual_1d(level: usize, branch: Branch) -> Vec<f64> {
    let len = filter_len(level);
    let mut taps = vec![0.0; len];
    let (first, second) = match branch {
        Branch::Refinement => (0.5, 0.5),
        Branch::Wavelet => (-0.5, 0.5),
    };
    taps[0] = first;
    taps[len / 2] = second;
    taps
}

/// Level-`level` combined taps, every entry `+-1/L`.
pub fn combined_1d(level: usize, branch: Branch) -> Vec<f64> {
    let len = filter_len(level);
    let w = 1.0 / len as f64;
    (0..len)
        .map(|k| match branch {
            Branch::Refinement => w,
            Branch::Wavelet if k < len / 2 => -w,
            Branch::Wavelet => w,
        })
        .collect()
}

pub fn taps_1d(level: usize, branch: Branch, form: KernelForm) -> Vec<f64> {
    match form {
        KernelForm::Individual => individual_1d(level, branch),
        KernelForm::Combined => combined_1d(level, branch),
    }
}

/// Folds taps onto a circle of `n` samples (circular convolution with a kernel longer than the signal).
pub fn wrap_taps(taps: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (k, &t) in taps.iter().enumerate() {
        out[k % n] += t;
    }
    out
}

/// Zero-lag circular autocorrelation `sum_m (wrapped f)[m]^2`.
///
/// For a circulant analysis operator `D` with kernel `f` and synthesis `R = D^T`,
/// this is the diagonal element of `R D` in one dimension.
pub fn circular_energy(taps: &[f64], n: usize) -> f64 {
    wrap_taps(taps, n).iter().map(|v| v * v).sum()
}

/// A 2D Haar kernel: outer product of a vertical and a horizontal 1D filter.
///
/// `taps[a * size + b]` weights the sample `a` rows up and `b` columns left of
/// the output pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct HaarKernel {
    pub level: usize,
    pub kind: BandKind,
    pub form: KernelForm,
    pub size: usize,
    pub taps: Vec<f64>,
    flipped: bool,
}

impl HaarKernel {
    pub fn analysis(level: usize, kind: BandKind, form: KernelForm) -> Self {
        let (vb, hb) = kind.branches();
        let v = taps_1d(level, vb, form);
        let h = taps_1d(level, hb, form);
        let size = v.len();
        let mut taps = Vec::with_capacity(size * size);
        for &a in &v {
            for &b in &h {
                taps.push(a * b);
            }
        }
        let kernel = Self { level, kind, form, size, taps, flipped: false };
        kernel.assert_structure();
        kernel
    }

    /// The synthesis kernel: flipped vertically and horizontally.
    pub fn synthesis(level: usize, kind: BandKind, form: KernelForm) -> Self {
        Self::analysis(level, kind, form).flipped()
    }

    pub fn flipped(&self) -> Self {
        let n = self.size;
        let mut taps = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                taps[(n - 1 - a) * n + (n - 1 - b)] = self.taps[a * n + b];
            }
        }
        Self { taps, flipped: !self.flipped, ..self.clone() }
    }

    pub fn is_flipped(&self) -> bool {
        self.flipped
    }

    #[inline]
    pub fn at(&self, a: usize, b: usize) -> f64 {
        self.taps[a * self.size + b]
    }

    /// Combined kernels are all `+-1/L^2` with the sign pattern of the outer
    /// product of the 1D sign patterns; individual kernels have four
    /// non-zero taps of magnitude `1/4`.
    fn assert_structure(&self) {
        let n = self.size;
        let (vb, hb) = self.kind.branches();
        let sign = |branch: Branch, k: usize| match branch {
            Branch::Refinement => 1.0,
            Branch::Wavelet if k < n / 2 => -1.0,
            Branch::Wavelet => 1.0,
        };
        match self.form {
            KernelForm::Combined => {
                let mag = 1.0 / (n * n) as f64;
                for a in 0..n {
                    for b in 0..n {
                        let expected = sign(vb, a) * sign(hb, b) * mag;
                        assert_eq!(self.at(a, b), expected, "combined kernel entry ({a},{b})");
                    }
                }
            }
            KernelForm::Individual => {
                let nonzero = self.taps.iter().filter(|t| **t != 0.0).count();
                assert_eq!(nonzero, 4, "individual kernel must have four taps");
                assert!(self.taps.iter().all(|t| *t == 0.0 || t.abs() == 0.25));
            }
        }
    }
}
