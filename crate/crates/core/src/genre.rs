//! Unbiased risk estimation and the optimal per-subband gains.
//!
//! With `Psi = [psi_1 .. psi_K]` the synthesis images of the noisy image `y`,
//! the estimate `x_hat = Psi alpha` has unbiased risk
//!
//! ```text
//! risk(alpha) = (alpha^T Q alpha - 2 alpha^T (Psi^T y) + y^T y + 2 alpha^T q - N sigma^2) / N
//! ```
//!
//! with `Q = Psi^T Psi`. Its minimizer solves `Q alpha = Psi^T y - q`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::uwt::kernel::{circular_energy, taps_1d, KernelForm};
use crate::uwt::{analyse, band_layout, check_dimensions, shrink_and_combine, FilterRealization, SynthesisImages};

/// Normal equations of the risk minimization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramSystem {
    /// Number of subbands `K`.
    pub bands: usize,
    /// Pixel count `N`.
    pub pixels: usize,
    /// `Psi^T Psi`, row-major `K x K`, symmetric.
    pub gram: Vec<f64>,
    /// `Psi^T y`.
    pub correlation: Vec<f64>,
    /// `sigma^2 Trace(H_i)`.
    pub trace: Vec<f64>,
    /// `y^T y`.
    pub energy: f64,
    pub sigma: f64,
}

impl GramSystem {
    #[inline]
    pub fn q(&self, i: usize, j: usize) -> f64 {
        self.gram[i * self.bands + j]
    }

    /// Right-hand side `Psi^T y - q`.
    pub fn rhs(&self) -> Vec<f64> {
        self.correlation.iter().zip(&self.trace).map(|(c, q)| c - q).collect()
    }

    /// `Q x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        matvec(&self.gram, self.bands, x)
    }

    pub fn trace_of_gram(&self) -> f64 {
        (0..self.bands).map(|i| self.q(i, i)).sum()
    }
}

fn matvec(m: &[f64], n: usize, x: &[f64]) -> Vec<f64> {
    (0..n).map(|i| m[i * n..(i + 1) * n].iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

fn max_norm(v: &[f64]) -> f64 {
    // NaN propagates
    v.iter().map(|x| x.abs()).fold(0.0, |m, a| if a > m || a.is_nan() { a } else { m })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Per-subband gains in the subband order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShrinkageVector(pub Vec<f64>);

impl std::ops::Deref for ShrinkageVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMethod {
    ClosedForm,
    GradientDescent,
}

impl SolverMethod {
    pub fn name(self) -> &'static str {
        match self {
            SolverMethod::ClosedForm => "closed",
            SolverMethod::GradientDescent => "gd",
        }
    }
}

impl fmt::Display for SolverMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "closed" | "closed-form" | "cholesky" => Ok(SolverMethod::ClosedForm),
            "gd" | "gradient-descent" => Ok(SolverMethod::GradientDescent),
            other => Err(Error::InvalidParameter(format!("unknown solver {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub method: SolverMethod,
    /// Gradient descent step.
    pub mu: f64,
    pub max_iters: usize,
    /// Stop when `max |Q~ alpha - c~| <= tol` on the normalized system.
    pub tol: f64,
    /// Closed form refuses systems with a larger condition estimate.
    pub condition_limit: f64,
    /// Scale the system by `N 2^k` so that `mu trace(Q~) <= 1`; without it only `N` is divided out.
    pub normalize: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { method: SolverMethod::ClosedForm, mu: 1.0 / 8192.0, max_iters: 300_000, tol: 1e-6, condition_limit: 1e12, normalize: true }
    }
}

impl SolverConfig {
    pub fn gradient_descent() -> Self {
        Self { method: SolverMethod::GradientDescent, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return Err(Error::InvalidParameter(format!("step size {} must be positive", self.mu)));
        }
        if !(self.tol.is_finite() && self.tol >= 0.0) {
            return Err(Error::InvalidParameter(format!("tolerance {} must be non-negative", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("iteration budget must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub method: SolverMethod,
    pub iterations: usize,
    /// Final `||Q alpha - c||`, in the units of the system that was iterated.
    pub residual: f64,
    pub converged: bool,
    /// `lambda_max / lambda_min` of `Q`, when estimated.
    pub condition: Option<f64>,
    /// `k` in the `N 2^k` normalization.
    pub shift: u32,
}

/// `q_i = sigma^2 Trace(H_i)` for every band.
///
/// `H_i` is block-circulant with the separable kernel `f_v (x) f_h` autocorrelated,
/// so its diagonal is constant and equals the product of the wrapped 1D energies.
pub fn trace_terms(width: usize, height: usize, levels: usize, sigma: f64) -> Result<Vec<f64>> {
    check_dimensions(width, height, levels)?;
    let n = (width * height) as f64;
    Ok(band_layout(levels)
        .into_iter()
        .map(|band| {
            let (vb, hb) = band.kind.branches();
            let ev = circular_energy(&taps_1d(band.level, vb, KernelForm::Combined), height);
            let eh = circular_energy(&taps_1d(band.level, hb, KernelForm::Combined), width);
            sigma * sigma * n * ev * eh
        })
        .collect())
}

const GRAM_CHUNK: usize = 4096;

struct Partial {
    gram: Vec<f64>,
    corr: Vec<f64>,
    energy: f64,
}

fn partial(psis: &[&[f64]], y: &[f64], start: usize, end: usize) -> Partial {
    let k = psis.len();
    let mut gram = vec![0.0; k * k];
    let mut corr = vec![0.0; k];
    for i in 0..k {
        let pi = &psis[i][start..end];
        corr[i] = dot(pi, &y[start..end]);
        for j in i..k {
            gram[i * k + j] = dot(pi, &psis[j][start..end]);
        }
    }
    let energy = dot(&y[start..end], &y[start..end]);
    Partial { gram, corr, energy }
}

/// Builds `Q`, `Psi^T y` and `y^T y`.
///
/// Pixels are split into fixed-size chunks whose partial sums are reduced in
/// chunk order, so the result does not depend on the thread count.
pub fn accumulate_gram(psis: &SynthesisImages, y: &Image, trace: &[f64], sigma: f64) -> Result<GramSystem> {
    if psis.width() != y.width() || psis.height() != y.height() {
        return Err(Error::ShapeMismatch(format!(
            "synthesis images are {}x{}, noisy image is {}x{}",
            psis.width(),
            psis.height(),
            y.width(),
            y.height()
        )));
    }
    if trace.len() != psis.len() {
        return Err(Error::BandCount { expected: psis.len(), actual: trace.len() });
    }
    let k = psis.len();
    let n = y.len();
    let planes: Vec<&[f64]> = psis.psis().iter().map(Image::data).collect();
    let bounds: Vec<(usize, usize)> = (0..n).step_by(GRAM_CHUNK).map(|s| (s, (s + GRAM_CHUNK).min(n))).collect();

    #[cfg(feature = "parallel")]
    let partials: Vec<Partial> = {
        use rayon::prelude::*;
        bounds.par_iter().map(|&(s, e)| partial(&planes, y.data(), s, e)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let partials: Vec<Partial> = bounds.iter().map(|&(s, e)| partial(&planes, y.data(), s, e)).collect();

    let mut gram = vec![0.0; k * k];
    let mut correlation = vec![0.0; k];
    let mut energy = 0.0;
    for p in partials {
        for (g, v) in gram.iter_mut().zip(&p.gram) {
            *g += v;
        }
        for (c, v) in correlation.iter_mut().zip(&p.corr) {
            *c += v;
        }
        energy += p.energy;
    }
    for i in 0..k {
        for j in 0..i {
            gram[i * k + j] = gram[j * k + i];
        }
    }
    Ok(GramSystem { bands: k, pixels: n, gram, correlation, trace: trace.to_vec(), energy, sigma })
}

/// Unbiased estimate of the per-pixel MSE of `Psi alpha`.
pub fn genre_risk(system: &GramSystem, alpha: &[f64]) -> f64 {
    let qa = system.apply(alpha);
    let n = system.pixels as f64;
    (dot(alpha, &qa) - 2.0 * dot(alpha, &system.correlation) + system.energy + 2.0 * dot(alpha, &system.trace)
        - n * system.sigma * system.sigma)
        / n
}

/// `d risk / d alpha = 2 (Q alpha - Psi^T y + q) / N`.
pub fn genre_gradient(system: &GramSystem, alpha: &[f64]) -> Vec<f64> {
    let qa = system.apply(alpha);
    let n = system.pixels as f64;
    qa.iter().zip(system.rhs()).map(|(a, b)| 2.0 * (a - b) / n).collect()
}

/// Lower-triangular Cholesky factor, or `None` when a pivot is not safely positive.
fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let max_diag = (0..n).map(|i| a[i * n + i]).fold(0.0, f64::max);
    if !(max_diag.is_finite() && max_diag > 0.0) {
        return None;
    }
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let s = a[i * n + j] - dot(&l[i * n..i * n + j], &l[j * n..j * n + j]);
            if i == j {
                if s <= max_diag * 1e-15 {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

fn cholesky_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut z = vec![0.0; n];
    for i in 0..n {
        z[i] = (b[i] - dot(&l[i * n..i * n + i], &z[..i])) / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = ((i + 1)..n).map(|k| l[k * n + i] * x[k]).sum();
        x[i] = (z[i] - s) / l[i * n + i];
    }
    x
}

fn rayleigh_iteration(n: usize, mut step: impl FnMut(&[f64]) -> Vec<f64>, iters: usize) -> f64 {
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.01 * i as f64).collect();
    let mut lambda = 0.0;
    for _ in 0..iters {
        let w = step(&v);
        let nw = norm(&w);
        if nw == 0.0 || !nw.is_finite() {
            return 0.0;
        }
        lambda = dot(&v, &w) / dot(&v, &v);
        v = w.into_iter().map(|x| x / nw).collect();
    }
    lambda
}

/// Largest eigenvalue of a symmetric positive semi-definite matrix.
fn lambda_max(m: &[f64], n: usize) -> f64 {
    rayleigh_iteration(n, |v| matvec(m, n, v), 500)
}

/// Closed-form minimizer via Cholesky with one step of iterative refinement.
pub fn solve_closed_form(system: &GramSystem, config: &SolverConfig) -> Result<(ShrinkageVector, SolverReport)> {
    let n = system.bands;
    let l = cholesky(&system.gram, n).ok_or(Error::IllConditioned { condition: f64::INFINITY })?;
    let lmax = lambda_max(&system.gram, n);
    let inv_max = rayleigh_iteration(n, |v| cholesky_solve(&l, n, v), 500);
    let condition = if inv_max > 0.0 { lmax * inv_max } else { f64::INFINITY };
    if condition.is_nan() || condition > config.condition_limit {
        return Err(Error::IllConditioned { condition });
    }
    let c = system.rhs();
    let mut alpha = cholesky_solve(&l, n, &c);
    let r: Vec<f64> = c.iter().zip(system.apply(&alpha)).map(|(c, q)| c - q).collect();
    let delta = cholesky_solve(&l, n, &r);
    for (a, d) in alpha.iter_mut().zip(delta) {
        *a += d;
    }
    let residual = norm(&c.iter().zip(system.apply(&alpha)).map(|(c, q)| c - q).collect::<Vec<_>>());
    let report = SolverReport {
        method: SolverMethod::ClosedForm,
        iterations: 1,
        residual,
        converged: residual <= 1e-8 * norm(&c).max(f64::MIN_POSITIVE),
        condition: Some(condition),
        shift: 0,
    };
    Ok((ShrinkageVector(alpha), report))
}

/// Smallest `k >= 0` with `mu trace(Q) / (N 2^k) <= 1`.
fn normalization_shift(system: &GramSystem, mu: f64) -> u32 {
    let t = mu * system.trace_of_gram() / system.pixels as f64;
    if t <= 1.0 || !t.is_finite() {
        0
    } else {
        t.log2().ceil() as u32
    }
}

/// Fixed-step gradient descent `alpha <- alpha - mu (Q~ alpha - c~)` from `init`.
///
/// `Q~` and `c~` are `Q` and `Psi^T y - q` divided by `N 2^k`. The iteration is
/// stable iff `mu lambda_max(Q~) < 2`; normalization makes that hold for any `mu`.
pub fn solve_gradient_descent(system: &GramSystem, config: &SolverConfig, init: &[f64]) -> Result<(ShrinkageVector, SolverReport)> {
    config.validate()?;
    let n = system.bands;
    if init.len() != n {
        return Err(Error::BandCount { expected: n, actual: init.len() });
    }
    let shift = if config.normalize { normalization_shift(system, config.mu) } else { 0 };
    let scale = 1.0 / (system.pixels as f64 * f64::powi(2.0, shift as i32));
    let q: Vec<f64> = system.gram.iter().map(|v| v * scale).collect();
    let c: Vec<f64> = system.rhs().iter().map(|v| v * scale).collect();
    let mu = config.mu;

    let mut alpha = init.to_vec();
    let mut grad: Vec<f64> = matvec(&q, n, &alpha).iter().zip(&c).map(|(a, b)| a - b).collect();
    let initial = max_norm(&grad);
    let mut residual = initial;
    let mut iterations = 0;
    while iterations < config.max_iters && residual > config.tol {
        for (a, g) in alpha.iter_mut().zip(&grad) {
            *a -= mu * g;
        }
        iterations += 1;
        grad = matvec(&q, n, &alpha).iter().zip(&c).map(|(a, b)| a - b).collect();
        residual = max_norm(&grad);
        if !residual.is_finite() || residual > 10.0 * initial.max(config.tol) {
            return Err(Error::Diverged { iterations, residual, initial, spectral_bound: mu * lambda_max(&q, n) });
        }
    }
    let report = SolverReport {
        method: SolverMethod::GradientDescent,
        iterations,
        residual,
        converged: residual <= config.tol,
        condition: None,
        shift,
    };
    Ok((ShrinkageVector(alpha), report))
}

/// Everything learned while denoising one image.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub alpha: Vec<f64>,
    /// Estimated per-pixel MSE at `alpha`.
    pub risk: f64,
    pub trace: Vec<f64>,
    pub solver: SolverReport,
    /// The closed form was refused and gradient descent from all-ones was used instead.
    pub rank_deficient: bool,
    pub sigma: f64,
    pub levels: usize,
    pub realization: FilterRealization,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Denoised {
    pub image: Image,
    pub diagnostics: Diagnostics,
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma.is_finite() && sigma >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("noise standard deviation {sigma} must be finite and non-negative")))
    }
}

/// Solves for the gains given a prepared system, falling back from the closed
/// form to gradient descent on a singular or ill-conditioned Gram matrix.
pub fn solve(system: &GramSystem, config: &SolverConfig) -> Result<(ShrinkageVector, SolverReport, bool)> {
    config.validate()?;
    match config.method {
        SolverMethod::GradientDescent => {
            let ones = vec![1.0; system.bands];
            solve_gradient_descent(system, config, &ones).map(|(a, r)| (a, r, false))
        }
        SolverMethod::ClosedForm => match solve_closed_form(system, config) {
            Ok((a, r)) => Ok((a, r, false)),
            Err(Error::IllConditioned { condition }) => {
                let ones = vec![1.0; system.bands];
                let (a, mut r) = solve_gradient_descent(system, config, &ones)?;
                r.condition = Some(condition);
                Ok((a, r, true))
            }
            Err(e) => Err(e),
        },
    }
}

/// Denoises `noisy`, whose additive noise has standard deviation `sigma`.
pub fn denoise(noisy: &Image, sigma: f64, levels: usize, config: &SolverConfig, realization: FilterRealization) -> Result<Denoised> {
    check_sigma(sigma)?;
    config.validate()?;
    let psis = analyse(noisy, levels, realization)?;
    denoise_from(&psis, noisy, sigma, config, realization)
}

/// [`denoise`] with precomputed synthesis images.
pub fn denoise_from(
    psis: &SynthesisImages,
    noisy: &Image,
    sigma: f64,
    config: &SolverConfig,
    realization: FilterRealization,
) -> Result<Denoised> {
    check_sigma(sigma)?;
    let levels = psis.levels();
    let trace = trace_terms(noisy.width(), noisy.height(), levels, sigma)?;
    let system = accumulate_gram(psis, noisy, &trace, sigma)?;
    let (alpha, solver, rank_deficient) = solve(&system, config)?;
    let image = shrink_and_combine(psis, &alpha)?;
    let risk = genre_risk(&system, &alpha);
    Ok(Denoised { image, diagnostics: Diagnostics { alpha: alpha.0, risk, trace, solver, rank_deficient, sigma, levels, realization } })
}
