//! Report rendering: human-readable, CSV and JSON.

use std::fmt::Write as _;

use clap::ValueEnum;
use genre_core::costmodel::{additions_per_pixel, bram_count, format_ratio, ratio_to_f64, CostQuery, Phase};
use genre_core::FilterRealization;
use serde::Serialize;

use crate::error::CliError;
use crate::pipeline::{FixedInfo, Precision};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Human,
    Csv,
    Json,
}

/// Quotes a CSV field when it contains a separator, quote or newline.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_default()
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map(|s| s + "\n").map_err(|e| CliError::Io(e.to_string()))
}

#[derive(Clone, Debug, Serialize)]
pub struct DenoiseReport {
    pub input: String,
    pub width: usize,
    pub height: usize,
    /// Reflect-padded to a multiple of `2^levels` and cropped back.
    pub padded: bool,
    pub precision: Precision,
    pub realization: FilterRealization,
    pub levels: usize,
    pub sigma: f64,
    pub noise_added: bool,
    pub distribution: Option<String>,
    pub seed: Option<u64>,
    pub quantize_input: bool,
    pub solver: String,
    pub iterations: usize,
    pub converged: bool,
    pub condition: Option<f64>,
    pub rank_deficient: bool,
    pub alpha: Vec<f64>,
    pub risk: f64,
    pub input_psnr: Option<f64>,
    pub input_ssim: Option<f64>,
    pub output_psnr: Option<f64>,
    pub output_ssim: Option<f64>,
    pub psnr_gain: Option<f64>,
    pub fixed: Option<FixedInfo>,
    pub notes: Vec<String>,
    pub warnings: Vec<String>,
}

impl DenoiseReport {
    const CSV_HEADER: &'static str =
        "input,width,height,precision,realization,levels,sigma,distribution,seed,solver,iterations,converged,risk,input_psnr,input_ssim,output_psnr,output_ssim,psnr_gain,alpha";

    pub fn render(&self, format: ReportFormat) -> Result<String, CliError> {
        match format {
            ReportFormat::Json => to_json(self),
            ReportFormat::Csv => {
                let alpha: Vec<String> = self.alpha.iter().map(|a| format!("{a:.6}")).collect();
                Ok(format!(
                    "{}\n{},{},{},{},{},{},{},{},{},{},{},{},{:.6},{},{},{},{},{},{}\n",
                    Self::CSV_HEADER,
                    csv_field(&self.input),
                    self.width,
                    self.height,
                    self.precision,
                    self.realization,
                    self.levels,
                    self.sigma,
                    self.distribution.as_deref().unwrap_or(""),
                    self.seed.map(|s| s.to_string()).unwrap_or_default(),
                    self.solver,
                    self.iterations,
                    self.converged,
                    self.risk,
                    opt(self.input_psnr),
                    opt(self.input_ssim),
                    opt(self.output_psnr),
                    opt(self.output_ssim),
                    opt(self.psnr_gain),
                    alpha.join(" ")
                ))
            }
            ReportFormat::Human => {
                let mut s = String::new();
                let _ = writeln!(
                    s,
                    "input        {} ({}x{}{})",
                    self.input,
                    self.width,
                    self.height,
                    if self.padded { ", padded" } else { "" }
                );
                let _ = writeln!(s, "precision    {} / {} / {} levels", self.precision, self.realization, self.levels);
                match (&self.distribution, self.seed) {
                    (Some(d), Some(seed)) => {
                        let _ = writeln!(s, "noise        {d}, sigma {}, seed {seed}", self.sigma);
                    }
                    _ => {
                        let _ = writeln!(s, "noise        observed, sigma {}", self.sigma);
                    }
                }
                let _ = writeln!(
                    s,
                    "solver       {} ({} iterations, {})",
                    self.solver,
                    self.iterations,
                    if self.converged { "converged" } else { "not converged" }
                );
                let _ = writeln!(s, "risk         {:.4}", self.risk);
                if let (Some(ip), Some(op)) = (self.input_psnr, self.output_psnr) {
                    let _ = writeln!(s, "PSNR         {ip:.3} dB -> {op:.3} dB (gain {:.3} dB)", op - ip);
                }
                if let (Some(is), Some(os)) = (self.input_ssim, self.output_ssim) {
                    let _ = writeln!(s, "SSIM         {is:.4} -> {os:.4}");
                }
                let alpha: Vec<String> = self.alpha.iter().map(|a| format!("{a:.4}")).collect();
                let _ = writeln!(s, "alpha        {}", alpha.join(" "));
                if let Some(f) = &self.fixed {
                    let _ = writeln!(
                        s,
                        "fixed point  {} schedule, {} overflows, max subband error {:.3e}{}",
                        f.schedule.name(),
                        f.overflow_count,
                        f.max_abs_subband_error,
                        f.psnr_delta.map(|d| format!(", PSNR delta {d:+.3} dB")).unwrap_or_default()
                    );
                }
                for n in &self.notes {
                    let _ = writeln!(s, "note         {n}");
                }
                for w in &self.warnings {
                    let _ = writeln!(s, "warning      {w}");
                }
                Ok(s)
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EvaluationRow {
    pub image: String,
    pub distribution: String,
    pub precision: Precision,
    pub sigma: f64,
    pub seed: u64,
    pub input_psnr: f64,
    pub input_ssim: f64,
    pub output_psnr: f64,
    pub output_ssim: f64,
    pub risk: f64,
    pub iterations: usize,
}

pub const EVALUATION_HEADER: &str = "image,distribution,precision,sigma,seed,input_psnr,input_ssim,output_psnr,output_ssim,risk,iterations";

pub fn render_evaluation(rows: &[EvaluationRow], format: ReportFormat) -> Result<String, CliError> {
    match format {
        ReportFormat::Json => to_json(&rows),
        ReportFormat::Csv => {
            let mut s = String::from(EVALUATION_HEADER);
            s.push('\n');
            for r in rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{:.4},{:.4},{:.4},{:.4},{:.4},{}",
                    csv_field(&r.image),
                    r.distribution,
                    r.precision,
                    r.sigma,
                    r.seed,
                    r.input_psnr,
                    r.input_ssim,
                    r.output_psnr,
                    r.output_ssim,
                    r.risk,
                    r.iterations
                );
            }
            Ok(s)
        }
        ReportFormat::Human => {
            let mut s = format!(
                "{:<20} {:<10} {:<10} {:>9} {:>8} {:>9} {:>8}\n",
                "image", "noise", "precision", "in PSNR", "in SSIM", "out PSNR", "out SSIM"
            );
            for r in rows {
                let _ = writeln!(
                    s,
                    "{:<20} {:<10} {:<10} {:>9.3} {:>8.4} {:>9.3} {:>8.4}",
                    r.image, r.distribution, r.precision, r.input_psnr, r.input_ssim, r.output_psnr, r.output_ssim
                );
            }
            Ok(s)
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CostRow {
    pub realization: FilterRealization,
    pub decomposition_additions: f64,
    pub recomposition_additions: f64,
    pub decomposition_bram: Option<f64>,
    pub recomposition_bram: Option<f64>,
    pub decomposition_bram_physical: Option<u64>,
    pub recomposition_bram_physical: Option<u64>,
}

/// Adder counts and memory for every realization at one level.
pub fn cost_rows(level: usize, width: usize, bit_width: u32) -> Result<Vec<CostRow>, CliError> {
    FilterRealization::ALL
        .into_iter()
        .map(|r| {
            let q = |phase| CostQuery { image_width: width, bit_width, ..CostQuery::new(r, phase, level) };
            let adds = |phase| additions_per_pixel(&q(phase)).map(ratio_to_f64);
            let bram = |phase| bram_count(&q(phase)).ok();
            let (bd, br) = (bram(Phase::Decomposition), bram(Phase::Recomposition));
            Ok(CostRow {
                realization: r,
                decomposition_additions: adds(Phase::Decomposition)?,
                recomposition_additions: adds(Phase::Recomposition)?,
                decomposition_bram: bd.as_ref().map(|b| ratio_to_f64(b.blocks)),
                recomposition_bram: br.as_ref().map(|b| ratio_to_f64(b.blocks)),
                decomposition_bram_physical: bd.map(|b| b.physical),
                recomposition_bram_physical: br.map(|b| b.physical),
            })
        })
        .collect()
}

fn blocks(v: Option<f64>) -> String {
    v.map(|b| if b.fract() == 0.0 { format!("{b}") } else { format!("{b:.1}") }).unwrap_or_else(|| "-".into())
}

pub fn render_costs(rows: &[CostRow], level: usize, format: ReportFormat) -> Result<String, CliError> {
    match format {
        ReportFormat::Json => to_json(&rows),
        ReportFormat::Csv => {
            let mut s = String::from("table,realization,level,decomposition,recomposition\n");
            for r in rows {
                let _ =
                    writeln!(s, "additions,{},{level},{:.2},{:.2}", r.realization, r.decomposition_additions, r.recomposition_additions);
            }
            for r in rows.iter().filter(|r| r.decomposition_bram.is_some()) {
                let _ = writeln!(s, "bram,{},{level},{},{}", r.realization, blocks(r.decomposition_bram), blocks(r.recomposition_bram));
            }
            Ok(s)
        }
        ReportFormat::Human => {
            let mut s = format!("Average additions per output pixel, level {level}\n");
            let _ = writeln!(s, "{:<10} {:>14} {:>14}", "method", "decomposition", "recomposition");
            for r in rows {
                let _ = writeln!(s, "{:<10} {:>14.2} {:>14.2}", r.realization, r.decomposition_additions, r.recomposition_additions);
            }
            let _ = writeln!(s, "\nBlock RAMs (36 Kb), level {level}");
            let _ = writeln!(s, "{:<10} {:>14} {:>14}", "method", "decomposition", "recomposition");
            for r in rows.iter().filter(|r| r.decomposition_bram.is_some()) {
                let _ = writeln!(s, "{:<10} {:>14} {:>14}", r.realization, blocks(r.decomposition_bram), blocks(r.recomposition_bram));
            }
            Ok(s)
        }
    }
}

/// Table cell text for an exact addition count.
pub fn additions_cell(r: FilterRealization, phase: Phase, level: usize) -> Result<String, CliError> {
    Ok(format_ratio(additions_per_pixel(&CostQuery::new(r, phase, level))?))
}
