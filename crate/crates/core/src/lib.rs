//! Distribution-free image denoising with an undecimated Haar filter bank.
//!
//! The denoiser decomposes an image into `3J + 1` undecimated Haar subbands,
//! passes each through its synthesis filter, and recombines the resulting
//! images `psi_i` with one gain `alpha_i` per subband. The gains minimize an
//! unbiased estimate of the mean squared error that only needs the noise
//! variance, not its distribution:
//!
//! ```text
//! risk(alpha) = (||Psi alpha - y||^2 + 2 alpha^T q - N sigma^2) / N
//! ```
//!
//! where `q_i = sigma^2 Trace(H_i)` and `H_i = R_i D_i` is the circulant
//! analysis/synthesis cascade of band `i`.
//!
//! Besides the floating-point pipeline the crate carries a bit-accurate
//! fixed-point model of a hardware datapath ([`fixedpoint`]), image quality
//! metrics ([`metrics`]) and an analytic adder/memory cost model
//! ([`costmodel`]).
//!
//! ```
//! use genre_core::{denoise, Distribution, FilterRealization, Image, NoiseModel, SolverConfig};
//!
//! let clean = Image::from_fn(64, 64, |r, c| ((r * 3 + c * 5) % 64) as f64 * 4.0);
//! let noisy = clean.add_noise(&NoiseModel::new(Distribution::Gaussian, 10.0, 7)).unwrap();
//! let out = denoise(&noisy, 10.0, 4, &SolverConfig::default(), FilterRealization::Uwt2d).unwrap();
//! assert_eq!(out.image.width(), 64);
//! assert_eq!(out.diagnostics.alpha.len(), 13);
//! ```

pub mod costmodel;
pub mod dump;
mod error;
pub mod fixedpoint;
pub mod genre;
pub mod image;
pub mod metrics;
#[cfg(feature = "oracle")]
#[doc(hidden)]
pub mod oracle;
pub mod uwt;

pub use crate::error::{Error, Result};
pub use crate::genre::{
    accumulate_gram, denoise, genre_gradient, genre_risk, solve_closed_form, solve_gradient_descent, trace_terms, Denoised, Diagnostics,
    GramSystem, ShrinkageVector, SolverConfig, SolverMethod, SolverReport,
};
pub use crate::image::{Distribution, Image, NoiseModel};
pub use crate::uwt::{
    decompose, decompose_recursive, recompose, reconstruct, shrink_and_combine, Band, BandKind, FilterRealization, SubbandSet,
    SynthesisImages,
};

/// Default number of decomposition levels (16 subbands).
pub const DEFAULT_LEVELS: usize = 5;
