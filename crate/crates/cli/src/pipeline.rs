//! One noisy-image experiment: inject noise, denoise, score.

use std::fmt;
use std::str::FromStr;

use genre_core::fixedpoint::{pipeline_fixed, FormatSchedule, ScheduleKind};
use genre_core::metrics::{psnr, ssim, Peak, SsimConfig};
use genre_core::{denoise, Diagnostics, Distribution, FilterRealization, Image, NoiseModel, SolverConfig};
use serde::Serialize;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Precision {
    Float,
    /// Fixed-point filter banks with fractions capped at six bits.
    Fixed,
    /// Fixed-point filter banks keeping every fraction bit.
    FixedFull,
}

impl Precision {
    pub fn name(self) -> &'static str {
        match self {
            Precision::Float => "float",
            Precision::Fixed => "fixed",
            Precision::FixedFull => "fixed-full",
        }
    }

    fn schedule(self) -> Option<ScheduleKind> {
        match self {
            Precision::Float => None,
            Precision::Fixed => Some(ScheduleKind::Truncated),
            Precision::FixedFull => Some(ScheduleKind::Full),
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "float" => Ok(Precision::Float),
            "fixed" | "fixed-truncated" => Ok(Precision::Fixed),
            "fixed-full" => Ok(Precision::FixedFull),
            other => Err(format!("unknown precision {other:?} (float, fixed, fixed-full)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSpec {
    pub distribution: Distribution,
    pub sigma: f64,
    pub seed: u64,
    pub levels: usize,
    pub solver: SolverConfig,
    pub realization: FilterRealization,
    pub precision: Precision,
    /// Round and clip the noisy observation to 8 bits before denoising.
    pub quantize_input: bool,
    pub peak: Peak,
}

impl Default for RunSpec {
    fn default() -> Self {
        Self {
            distribution: Distribution::Gaussian,
            sigma: 25.0,
            seed: 0,
            levels: genre_core::DEFAULT_LEVELS,
            solver: SolverConfig::default(),
            realization: FilterRealization::Uwt2d,
            precision: Precision::Float,
            quantize_input: false,
            peak: Peak::Dynamic8Bit,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FixedInfo {
    pub schedule: ScheduleKind,
    pub overflow_count: u64,
    pub max_abs_subband_error: f64,
    /// `PSNR(fixed) - PSNR(float)` on the same noisy input.
    pub psnr_delta: Option<f64>,
    pub input_quantized: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Scores {
    pub input_psnr: f64,
    pub input_ssim: f64,
    pub output_psnr: f64,
    pub output_ssim: f64,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub noisy: Image,
    /// Rounded and clipped to 8 bits, as written to disk.
    pub output: Image,
    pub diagnostics: Diagnostics,
    pub fixed: Option<FixedInfo>,
    pub scores: Option<Scores>,
}

pub fn score(reference: &Image, noisy: &Image, output: &Image, peak: Peak) -> Result<Scores, CliError> {
    let cfg = SsimConfig::default();
    Ok(Scores {
        input_psnr: psnr(reference, noisy, peak)?,
        input_ssim: ssim(reference, noisy, &cfg)?,
        output_psnr: psnr(reference, output, peak)?,
        output_ssim: ssim(reference, output, &cfg)?,
    })
}

/// Adds noise to `clean` per `spec` and denoises it.
pub fn run_synthetic(clean: &Image, spec: &RunSpec) -> Result<RunOutcome, CliError> {
    let model = NoiseModel::new(spec.distribution, spec.sigma, spec.seed);
    let mut noisy = clean.add_noise(&model)?;
    if spec.quantize_input {
        noisy = noisy.quantize_8bit();
    }
    let mut out = run_observed(&noisy, spec, Some(clean))?;
    out.noisy = noisy;
    Ok(out)
}

/// Denoises an observation; scores it when a clean reference is given.
pub fn run_observed(noisy: &Image, spec: &RunSpec, reference: Option<&Image>) -> Result<RunOutcome, CliError> {
    let (output, diagnostics, fixed) = match spec.precision.schedule() {
        None => {
            let d = denoise(noisy, spec.sigma, spec.levels, &spec.solver, spec.realization)?;
            (d.image.quantize_8bit(), d.diagnostics, None)
        }
        Some(kind) => {
            let schedule = FormatSchedule::new(kind, spec.levels)?;
            let r = pipeline_fixed(noisy, spec.sigma, &schedule, &spec.solver, reference, None)?;
            let info = FixedInfo {
                schedule: r.schedule,
                overflow_count: r.overflow_count,
                max_abs_subband_error: r.max_abs_subband_error,
                psnr_delta: r.psnr_delta,
                input_quantized: r.input_quantized,
            };
            (r.image, r.diagnostics, Some(info))
        }
    };
    let scores = reference.map(|r| score(r, noisy, &output, spec.peak)).transpose()?;
    Ok(RunOutcome { noisy: noisy.clone(), output, diagnostics, fixed, scores })
}
