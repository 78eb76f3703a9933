//! Command-line driver for the GenRE denoiser.

pub mod error;
pub mod io;
pub mod pipeline;
pub mod report;

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use genre_core::dump::write_dump;
use genre_core::metrics::Peak;
use genre_core::uwt::{analyse, decompose};
use genre_core::{Distribution, FilterRealization, Image, SolverConfig, SolverMethod};
use rayon::prelude::*;

pub use crate::error::CliError;
use crate::pipeline::{run_observed, run_synthetic, Precision, RunSpec};
use crate::report::{cost_rows, render_costs, render_evaluation, DenoiseReport, EvaluationRow, ReportFormat};

#[derive(Debug, Parser)]
#[command(name = "genre", version, about = "Distribution-free image denoising with undecimated Haar subband shrinkage")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Add synthetic noise to a clean image (or take an observation as is) and denoise it.
    Denoise(DenoiseArgs),
    /// Score a corpus of clean images over noise distributions and precisions.
    Evaluate(EvaluateArgs),
    /// Print adder and block-RAM costs of every filter-bank realization.
    CostTables(CostArgs),
    /// Write the subbands (or synthesis images) of an image to a binary dump.
    DumpSubbands(DumpArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Pad {
    Reflect,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, default_value = "closed", value_parser = parse_solver)]
    pub solver: SolverMethod,
    /// Gradient descent step.
    #[arg(long, default_value_t = 1.0 / 8192.0)]
    pub mu: f64,
    /// Gradient descent iteration budget.
    #[arg(long, default_value_t = 300_000)]
    pub iters: usize,
    /// Gradient descent residual tolerance on the normalized system.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig { method: self.solver, mu: self.mu, max_iters: self.iters, tol: self.tol, ..SolverConfig::default() }
    }
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Noise standard deviation.
    #[arg(long, default_value_t = 25.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = genre_core::DEFAULT_LEVELS)]
    pub levels: usize,
    #[arg(long, default_value = "uwt-2d", value_parser = parse_realization)]
    pub realization: FilterRealization,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Round and clip the noisy observation to 8 bits.
    #[arg(long)]
    pub quantize_input: bool,
    /// PSNR peak: `255`, `reference` (max of the clean image) or `test` (max of the scored image).
    #[arg(long, default_value = "255", value_parser = parse_peak)]
    pub peak: Peak,
    #[arg(long, value_enum, default_value = "human")]
    pub report: ReportFormat,
}

#[derive(Debug, Args)]
pub struct DenoiseArgs {
    pub input: PathBuf,
    /// Denoised image, PGM or PNG by extension.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Also write the noisy observation.
    #[arg(long)]
    pub noisy_output: Option<PathBuf>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub report_output: Option<PathBuf>,
    #[arg(long, default_value = "gaussian", value_parser = parse_distribution)]
    pub dist: Distribution,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Treat the input as the noisy observation; no noise is added.
    #[arg(long)]
    pub observed: bool,
    /// Clean image to score an observed input against.
    #[arg(long, requires = "observed")]
    pub reference: Option<PathBuf>,
    #[arg(long, default_value = "float", value_parser = parse_precision)]
    pub precision: Precision,
    /// Extend images whose sides are not multiples of 2^levels, then crop.
    #[arg(long, value_enum)]
    pub pad: Option<Pad>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Clean images or directories of them.
    pub inputs: Vec<PathBuf>,
    /// Noise distributions; repeat or separate with commas.
    #[arg(long, value_delimiter = ',', default_value = "gaussian", value_parser = parse_distribution)]
    pub dist: Vec<Distribution>,
    #[arg(long, value_delimiter = ',', default_value = "float", value_parser = parse_precision)]
    pub precision: Vec<Precision>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct CostArgs {
    #[arg(long, default_value_t = 5)]
    pub level: usize,
    /// Image width feeding the line buffers.
    #[arg(long, default_value_t = 512)]
    pub width: usize,
    #[arg(long, default_value_t = 16)]
    pub bit_width: u32,
    #[arg(long, value_enum, default_value = "csv")]
    pub report: ReportFormat,
}

#[derive(Debug, Args)]
pub struct DumpArgs {
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = genre_core::DEFAULT_LEVELS)]
    pub levels: usize,
    #[arg(long, default_value = "uwt-2d", value_parser = parse_realization)]
    pub realization: FilterRealization,
    /// Dump the synthesis images instead of the analysis subbands.
    #[arg(long)]
    pub synthesis: bool,
}

fn parse_solver(s: &str) -> Result<SolverMethod, String> {
    s.parse().map_err(|e: genre_core::Error| e.to_string())
}

fn parse_realization(s: &str) -> Result<FilterRealization, String> {
    s.parse().map_err(|e: genre_core::Error| e.to_string())
}

fn parse_distribution(s: &str) -> Result<Distribution, String> {
    s.parse().map_err(|e: genre_core::Error| e.to_string())
}

fn parse_peak(s: &str) -> Result<Peak, String> {
    match s {
        "255" => Ok(Peak::Dynamic8Bit),
        "reference" => Ok(Peak::ReferenceMax),
        "test" => Ok(Peak::TestMax),
        other => Err(format!("unknown peak {other:?} (255, reference, test)")),
    }
}

fn parse_precision(s: &str) -> Result<Precision, String> {
    s.parse()
}

fn spec_from(p: &PipelineArgs, distribution: Distribution, seed: u64, precision: Precision) -> RunSpec {
    RunSpec {
        distribution,
        sigma: p.sigma,
        seed,
        levels: p.levels,
        solver: p.solver.config(),
        realization: p.realization,
        precision,
        quantize_input: p.quantize_input,
        peak: p.peak,
    }
}

fn emit(text: &str, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

const FIXED_NOTE: &str = "filter banks run in fixed point; Gram accumulation and the solver run in double precision";

pub fn cmd_denoise(args: &DenoiseArgs) -> Result<String, CliError> {
    let input = io::read_image(&args.input)?;
    let spec = spec_from(&args.pipeline, args.dist, args.seed, args.precision);
    if spec.levels == 0 || spec.levels > 16 {
        return Err(CliError::Usage(format!("--levels {} outside 1..=16", spec.levels)));
    }
    if args.precision != Precision::Float && args.observed && !input.is_8bit() {
        return Err(CliError::Usage("fixed precision needs an 8-bit input".into()));
    }
    let multiple = 1usize << spec.levels;
    let (w, h) = (input.width(), input.height());
    let aligned = w % multiple == 0 && h % multiple == 0;
    let padded = !aligned && args.pad.is_some();
    let work = if padded { io::pad_reflect(&input, multiple) } else { input.clone() };

    let reference = match &args.reference {
        Some(p) => {
            let r = io::read_image(p)?;
            if !r.same_shape(&input) {
                return Err(CliError::Io(format!("reference {} differs in size from the input", p.display())));
            }
            Some(r)
        }
        None => None,
    };
    let mut outcome = if args.observed { run_observed(&work, &spec, None)? } else { run_synthetic(&work, &spec)? };
    if padded {
        outcome.output = io::crop(&outcome.output, w, h);
        outcome.noisy = io::crop(&outcome.noisy, w, h);
    }
    let clean = if args.observed { reference.as_ref() } else { Some(&input) };
    let scores = clean.map(|c| pipeline::score(c, &outcome.noisy, &outcome.output, spec.peak)).transpose()?;

    if let Some(p) = &args.output {
        io::write_image(&outcome.output, p)?;
    }
    if let Some(p) = &args.noisy_output {
        io::write_image(&outcome.noisy, p)?;
    }

    let d = &outcome.diagnostics;
    let mut notes = Vec::new();
    let mut warnings = Vec::new();
    if args.precision != Precision::Float {
        notes.push(FIXED_NOTE.to_string());
    }
    if padded {
        notes.push(format!("reflect-padded to a multiple of {multiple} and cropped"));
    }
    if let Some(f) = &outcome.fixed {
        if f.overflow_count > 0 {
            warnings.push(format!("{} fixed-point samples saturated", f.overflow_count));
        }
    }
    if !d.solver.converged {
        warnings.push("solver stopped before reaching its tolerance".into());
    }
    if d.rank_deficient {
        warnings.push("Gram matrix is singular or ill-conditioned; gradient descent from unit gains was used".into());
    }
    let report = DenoiseReport {
        input: args.input.display().to_string(),
        width: w,
        height: h,
        padded,
        precision: args.precision,
        realization: spec.realization,
        levels: spec.levels,
        sigma: spec.sigma,
        noise_added: !args.observed,
        distribution: (!args.observed).then(|| args.dist.to_string()),
        seed: (!args.observed).then_some(args.seed),
        quantize_input: spec.quantize_input,
        solver: d.solver.method.to_string(),
        iterations: d.solver.iterations,
        converged: d.solver.converged,
        condition: d.solver.condition,
        rank_deficient: d.rank_deficient,
        alpha: d.alpha.clone(),
        risk: d.risk,
        input_psnr: scores.as_ref().map(|s| s.input_psnr),
        input_ssim: scores.as_ref().map(|s| s.input_ssim),
        output_psnr: scores.as_ref().map(|s| s.output_psnr),
        output_ssim: scores.as_ref().map(|s| s.output_ssim),
        psnr_gain: scores.as_ref().map(|s| s.output_psnr - s.input_psnr),
        fixed: outcome.fixed.clone(),
        notes,
        warnings,
    };
    report.render(args.pipeline.report)
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<String, CliError> {
    let files = io::expand_inputs(&args.inputs)?;
    let images: Vec<(String, Image)> = files
        .iter()
        .map(|p| {
            let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| p.display().to_string());
            io::read_image(p).map(|img| (name, img))
        })
        .collect::<Result<_, _>>()?;
    let jobs: Vec<(usize, Distribution, Precision)> =
        (0..images.len()).flat_map(|i| args.dist.iter().flat_map(move |&d| args.precision.iter().map(move |&p| (i, d, p)))).collect();
    let rows: Vec<EvaluationRow> = jobs
        .par_iter()
        .map(|&(i, dist, precision)| {
            let (name, clean) = &images[i];
            let spec = spec_from(&args.pipeline, dist, args.seed, precision);
            let out = run_synthetic(clean, &spec)?;
            let s = out.scores.expect("synthetic runs are scored");
            Ok(EvaluationRow {
                image: name.clone(),
                distribution: dist.to_string(),
                precision,
                sigma: spec.sigma,
                seed: spec.seed,
                input_psnr: s.input_psnr,
                input_ssim: s.input_ssim,
                output_psnr: s.output_psnr,
                output_ssim: s.output_ssim,
                risk: out.diagnostics.risk,
                iterations: out.diagnostics.solver.iterations,
            })
        })
        .collect::<Result<_, CliError>>()?;
    render_evaluation(&rows, args.pipeline.report)
}

pub fn cmd_cost_tables(args: &CostArgs) -> Result<String, CliError> {
    let rows = cost_rows(args.level, args.width, args.bit_width)?;
    render_costs(&rows, args.level, args.report)
}

pub fn cmd_dump_subbands(args: &DumpArgs) -> Result<String, CliError> {
    let img = io::read_image(&args.input)?;
    let bands: Vec<Image> = if args.synthesis {
        analyse(&img, args.levels, args.realization)?.psis().to_vec()
    } else {
        decompose(&img, args.levels, args.realization)?.into_bands()
    };
    let file = fs::File::create(&args.output).map_err(|e| CliError::Io(format!("{}: {e}", args.output.display())))?;
    write_dump(std::io::BufWriter::new(file), &bands)?;
    Ok(format!("wrote {} bands of {}x{} to {}\n", bands.len(), img.width(), img.height(), args.output.display()))
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Denoise(a) => emit(&cmd_denoise(a)?, a.report_output.as_deref()),
        Command::Evaluate(a) => emit(&cmd_evaluate(a)?, None),
        Command::CostTables(a) => emit(&cmd_cost_tables(a)?, None),
        Command::DumpSubbands(a) => emit(&cmd_dump_subbands(a)?, None),
    }
}

/// Parses `args` and runs; returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
