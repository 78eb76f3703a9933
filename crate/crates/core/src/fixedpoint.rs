//! Bit-accurate model of the fixed-point filter-bank datapath.
//!
//! Values are raw two's-complement integers `k` on the grid `k 2^-n` of a
//! [`QFormat`]. Decomposition runs the four-tap 2D cascade; every level adds
//! four samples and divides by four with a two-bit shift, so level `j` outputs
//! carry `2j` fraction bits. Synthesis runs the running-sum box form and divides
//! by `L^2`, carrying `4j` fraction bits. The truncated schedule drops low bits
//! to keep words at 16 bits or less.
//!
//! Gram accumulation and the solver stay in floating point; only the filter
//! banks are modelled.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genre::{accumulate_gram, genre_risk, solve, trace_terms, Diagnostics, SolverConfig};
use crate::image::Image;
use crate::metrics::{psnr, Peak};
use crate::uwt::ops::reverse2d;
use crate::uwt::{analyse, band_layout, check_dimensions, shrink_and_combine, BandKind, FilterRealization, SubbandSet, SynthesisImages};

/// Fixed-point format `Qm.n`, with an extra sign bit when signed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QFormat {
    pub signed: bool,
    pub int_bits: u32,
    pub frac_bits: u32,
}

impl QFormat {
    pub const MAX_WIDTH: u32 = 32;

    pub const fn signed(int_bits: u32, frac_bits: u32) -> Self {
        Self { signed: true, int_bits, frac_bits }
    }

    pub const fn unsigned(int_bits: u32, frac_bits: u32) -> Self {
        Self { signed: false, int_bits, frac_bits }
    }

    /// Total word width in bits.
    pub fn width(self) -> u32 {
        self.int_bits + self.frac_bits + u32::from(self.signed)
    }

    pub fn validate(self) -> Result<()> {
        if self.width() > Self::MAX_WIDTH || self.width() == 0 {
            return Err(Error::InvalidParameter(format!("{self} is {} bits wide", self.width())));
        }
        Ok(())
    }

    pub fn min_raw(self) -> i64 {
        if self.signed {
            -(1i64 << (self.int_bits + self.frac_bits))
        } else {
            0
        }
    }

    pub fn max_raw(self) -> i64 {
        (1i64 << (self.int_bits + self.frac_bits)) - 1
    }

    /// Grid spacing `2^-n`.
    pub fn lsb(self) -> f64 {
        (-(self.frac_bits as f64)).exp2()
    }

    pub fn min_value(self) -> f64 {
        self.min_raw() as f64 * self.lsb()
    }

    pub fn max_value(self) -> f64 {
        self.max_raw() as f64 * self.lsb()
    }

    fn saturate(self, raw: i64) -> (i64, bool) {
        if raw > self.max_raw() {
            (self.max_raw(), true)
        } else if raw < self.min_raw() {
            (self.min_raw(), true)
        } else {
            (raw, false)
        }
    }
}

impl fmt::Display for QFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q{}.{}", self.int_bits, self.frac_bits)?;
        if !self.signed {
            f.write_str(" (unsigned)")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rounding {
    /// Drop low bits of the two's-complement pattern (toward negative infinity).
    Truncate,
    /// Nearest, ties away from zero.
    Nearest,
}

/// A value on a [`QFormat`] grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fixed {
    pub raw: i64,
    pub format: QFormat,
    /// The value was clamped to the format range.
    pub overflow: bool,
}

impl Fixed {
    pub fn to_f64(self) -> f64 {
        self.raw as f64 * self.format.lsb()
    }
}

/// Places `x` on the grid of `format`, saturating at the range bounds.
pub fn quantize(x: f64, format: QFormat, mode: Rounding) -> Fixed {
    debug_assert!(x.is_finite());
    let scaled = x * f64::from(format.frac_bits).exp2();
    let r = match mode {
        Rounding::Truncate => scaled.floor(),
        Rounding::Nearest => scaled.round(),
    };
    let clamped = r.clamp(format.min_raw() as f64, format.max_raw() as f64);
    Fixed { raw: clamped as i64, format, overflow: clamped != r }
}

/// Moves a raw value with `from_frac` fraction bits onto `format`.
pub fn requantize(raw: i64, from_frac: u32, format: QFormat, mode: Rounding) -> Fixed {
    let to = format.frac_bits;
    let moved = if from_frac >= to {
        let shift = from_frac - to;
        match mode {
            Rounding::Truncate => raw >> shift,
            Rounding::Nearest if shift == 0 => raw,
            Rounding::Nearest => {
                let half = 1i64 << (shift - 1);
                if raw >= 0 {
                    (raw + half) >> shift
                } else {
                    -((-raw + half) >> shift)
                }
            }
        }
    } else {
        raw << (to - from_frac)
    };
    let (raw, overflow) = format.saturate(moved);
    Fixed { raw, format, overflow }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    /// Every fraction bit produced by the filters is kept.
    Full,
    /// Fractions capped at six bits, words at most 16 bits wide.
    Truncated,
}

impl ScheduleKind {
    pub fn name(self) -> &'static str {
        match self {
            ScheduleKind::Full => "fixed-full",
            ScheduleKind::Truncated => "fixed",
        }
    }
}

impl FromStr for ScheduleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" | "truncated" | "fixed-truncated" => Ok(ScheduleKind::Truncated),
            "fixed-full" | "full" => Ok(ScheduleKind::Full),
            other => Err(Error::InvalidParameter(format!("unknown fixed-point schedule {other:?}"))),
        }
    }
}

/// Per-level output formats of the analysis and synthesis filters.
///
/// Index `j - 1` holds level `j`. Detail bands are signed with 7 integer bits;
/// the approximation is unsigned with 8, and uses the detail fraction widths.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormatSchedule {
    pub kind: ScheduleKind,
    pub decomposition: Vec<QFormat>,
    pub decomposition_ll: Vec<QFormat>,
    pub recomposition: Vec<QFormat>,
    pub recomposition_ll: Vec<QFormat>,
}

impl FormatSchedule {
    pub const FRACTION_CAP: u32 = 6;

    pub fn new(kind: ScheduleKind, levels: usize) -> Result<Self> {
        if levels == 0 {
            return Err(Error::ZeroLevels);
        }
        let cap = |n: u32| match kind {
            ScheduleKind::Full => n,
            ScheduleKind::Truncated => n.min(Self::FRACTION_CAP),
        };
        let levels = levels as u32;
        let dec: Vec<u32> = (1..=levels).map(|j| cap(2 * j)).collect();
        let rec: Vec<u32> = (1..=levels).map(|j| cap(4 * j)).collect();
        let schedule = Self {
            kind,
            decomposition: dec.iter().map(|&n| QFormat::signed(7, n)).collect(),
            decomposition_ll: dec.iter().map(|&n| QFormat::unsigned(8, n)).collect(),
            recomposition: rec.iter().map(|&n| QFormat::signed(7, n)).collect(),
            recomposition_ll: rec.iter().map(|&n| QFormat::unsigned(8, n)).collect(),
        };
        for f in schedule.all_formats() {
            f.validate()?;
        }
        Ok(schedule)
    }

    pub fn full(levels: usize) -> Result<Self> {
        Self::new(ScheduleKind::Full, levels)
    }

    pub fn truncated(levels: usize) -> Result<Self> {
        Self::new(ScheduleKind::Truncated, levels)
    }

    pub fn levels(&self) -> usize {
        self.decomposition.len()
    }

    fn all_formats(&self) -> impl Iterator<Item = QFormat> + '_ {
        self.decomposition.iter().chain(&self.decomposition_ll).chain(&self.recomposition).chain(&self.recomposition_ll).copied()
    }

    fn analysis_format(&self, level: usize, kind: BandKind) -> QFormat {
        match kind {
            BandKind::LL => self.decomposition_ll[level - 1],
            _ => self.decomposition[level - 1],
        }
    }

    fn synthesis_format(&self, level: usize, kind: BandKind) -> QFormat {
        match kind {
            BandKind::LL => self.recomposition_ll[level - 1],
            _ => self.recomposition[level - 1],
        }
    }
}

/// Fixed-point planes in subband order, each with its format.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedBands {
    pub width: usize,
    pub height: usize,
    pub levels: usize,
    pub planes: Vec<Vec<i64>>,
    pub formats: Vec<QFormat>,
    /// Number of saturated samples.
    pub overflow_count: u64,
}

impl FixedBands {
    pub fn overflowed(&self) -> bool {
        self.overflow_count > 0
    }

    fn to_images(&self) -> Vec<Image> {
        self.planes
            .iter()
            .zip(&self.formats)
            .map(|(p, f)| {
                let lsb = f.lsb();
                Image::new(self.width, self.height, p.iter().map(|&r| r as f64 * lsb).collect()).expect("plane keeps its shape")
            })
            .collect()
    }

    pub fn to_subbands(&self) -> Result<SubbandSet> {
        SubbandSet::new(self.levels, self.to_images())
    }

    pub fn to_synthesis(&self) -> Result<SynthesisImages> {
        SynthesisImages::new(self.levels, self.to_images())
    }
}

fn store(raw: i64, from_frac: u32, format: QFormat, overflow: &mut u64) -> i64 {
    let f = requantize(raw, from_frac, format, Rounding::Truncate);
    *overflow += u64::from(f.overflow);
    f.raw
}

/// Analysis filter bank in integer arithmetic on an 8-bit image.
pub fn decompose_fixed(img: &Image, schedule: &FormatSchedule) -> Result<FixedBands> {
    let levels = schedule.levels();
    let (w, h) = (img.width(), img.height());
    check_dimensions(w, h, levels)?;
    if !img.is_8bit() {
        return Err(Error::InvalidParameter("fixed-point input must hold integers in 0..=255".into()));
    }
    let mut approx: Vec<i64> = img.data().iter().map(|&v| v as i64).collect();
    let mut approx_frac = 0u32;
    let mut planes = Vec::with_capacity(3 * levels + 1);
    let mut formats = Vec::with_capacity(3 * levels + 1);
    let mut overflow = 0u64;
    for level in 1..=levels {
        let s = 1usize << (level - 1);
        let sum_frac = approx_frac + 2;
        let fd = schedule.analysis_format(level, BandKind::HH);
        let fl = schedule.analysis_format(level, BandKind::LL);
        let n = w * h;
        let (mut lh, mut hl, mut hh, mut ll) = (vec![0; n], vec![0; n], vec![0; n], vec![0; n]);
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
                ll[i] = store(p1 + p2, sum_frac, fl, &mut overflow);
                hh[i] = store(p1 - p2, sum_frac, fd, &mut overflow);
                lh[i] = store(m1 + m2, sum_frac, fd, &mut overflow);
                hl[i] = store(m1 - m2, sum_frac, fd, &mut overflow);
            }
        }
        planes.extend([lh, hl, hh]);
        formats.extend([fd; 3]);
        approx = ll;
        approx_frac = fl.frac_bits;
    }
    planes.push(approx);
    formats.push(schedule.analysis_format(levels, BandKind::LL));
    Ok(FixedBands { width: w, height: h, levels, planes, formats, overflow_count: overflow })
}

/// Circular running sums over the last `s` samples in both axes.
fn box_sums(src: &[i64], w: usize, h: usize, s: usize) -> Vec<i64> {
    let mut rows = vec![0i64; w * h];
    for r in 0..h {
        let row = &src[r * w..(r + 1) * w];
        let mut acc: i64 = (0..s).map(|k| row[(w - k) % w]).sum();
        rows[r * w] = acc;
        for c in 1..w {
            acc += row[c] - row[(c + w - s) % w];
            rows[r * w + c] = acc;
        }
    }
    let mut out = vec![0i64; w * h];
    for c in 0..w {
        let mut acc: i64 = (0..s).map(|k| rows[((h - k) % h) * w + c]).sum();
        out[c] = acc;
        for r in 1..h {
            acc += rows[r * w + c] - rows[((r + h - s) % h) * w + c];
            out[r * w + c] = acc;
        }
    }
    out
}

/// Synthesis filter bank: each band through its flipped combined kernel,
/// evaluated with box sums in integer arithmetic.
pub fn recompose_fixed(bands: &FixedBands, schedule: &FormatSchedule) -> Result<FixedBands> {
    if bands.levels != schedule.levels() {
        return Err(Error::InvalidParameter(format!("schedule has {} levels, subbands have {}", schedule.levels(), bands.levels)));
    }
    let (w, h) = (bands.width, bands.height);
    let mut overflow = 0u64;
    let mut planes = Vec::with_capacity(bands.planes.len());
    let mut formats = Vec::with_capacity(bands.planes.len());
    for ((band, plane), fin) in band_layout(bands.levels).into_iter().zip(&bands.planes).zip(&bands.formats) {
        let s = 1usize << (band.level - 1);
        let fout = schedule.synthesis_format(band.level, band.kind);
        let sum_frac = fin.frac_bits + 2 * band.level as u32;
        let rev = reverse2d(plane, w, h);
        let sums = box_sums(&rev, w, h, s);
        let mut out = vec![0i64; w * h];
        for r in 0..h {
            let rs = (r + h - s) % h;
            for c in 0..w {
                let cs = (c + w - s) % w;
                let d = sums[r * w + c];
                let b = sums[r * w + cs];
                let cc = sums[rs * w + c];
                let a = sums[rs * w + cs];
                let total = match band.kind {
                    BandKind::LL => d + b + cc + a,
                    BandKind::LH => -d + b - cc + a,
                    BandKind::HL => -d - b + cc + a,
                    BandKind::HH => d - b - cc + a,
                };
                out[r * w + c] = store(total, sum_frac, fout, &mut overflow);
            }
        }
        planes.push(reverse2d(&out, w, h));
        formats.push(fout);
    }
    Ok(FixedBands { width: w, height: h, levels: bands.levels, planes, formats, overflow_count: overflow + bands.overflow_count })
}

/// Outcome of a fixed-point denoising run.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedReport {
    /// 8-bit output, rounded to nearest and clipped.
    pub image: Image,
    pub diagnostics: Diagnostics,
    pub schedule: ScheduleKind,
    /// Saturated samples over both filter banks.
    pub overflow_count: u64,
    /// `max |psi_fixed - psi_float|` over all bands.
    pub max_abs_subband_error: f64,
    /// The noisy input was rounded and clipped to 8 bits before filtering.
    pub input_quantized: bool,
    /// The floating-point pipeline on the same input, rounded to 8 bits.
    pub float_image: Image,
    /// `PSNR(fixed) - PSNR(float)` against the reference, when one is given.
    pub psnr_delta: Option<f64>,
}

/// Denoises with fixed-point filter banks and compares against the float pipeline.
///
/// `alpha_override` skips the solve and uses the given gains.
pub fn pipeline_fixed(
    noisy: &Image,
    sigma: f64,
    schedule: &FormatSchedule,
    config: &SolverConfig,
    reference: Option<&Image>,
    alpha_override: Option<&[f64]>,
) -> Result<FixedReport> {
    let levels = schedule.levels();
    let input_quantized = !noisy.is_8bit();
    let y8 = if input_quantized { noisy.quantize_8bit() } else { noisy.clone() };

    let fixed_psis = recompose_fixed(&decompose_fixed(&y8, schedule)?, schedule)?;
    let psis = fixed_psis.to_synthesis()?;
    let float_psis = analyse(&y8, levels, FilterRealization::Uwt2d)?;
    let max_abs_subband_error = psis
        .psis()
        .iter()
        .zip(float_psis.psis())
        .map(|(a, b)| a.max_abs_diff(b))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);

    let trace = trace_terms(y8.width(), y8.height(), levels, sigma)?;
    let system = accumulate_gram(&psis, &y8, &trace, sigma)?;
    let (alpha, solver, rank_deficient) = match alpha_override {
        Some(a) => {
            if a.len() != psis.len() {
                return Err(Error::BandCount { expected: psis.len(), actual: a.len() });
            }
            let report = crate::genre::SolverReport {
                method: config.method,
                iterations: 0,
                residual: f64::NAN,
                converged: true,
                condition: None,
                shift: 0,
            };
            (a.to_vec(), report, false)
        }
        None => {
            let (a, r, d) = solve(&system, config)?;
            (a.0, r, d)
        }
    };
    let risk = genre_risk(&system, &alpha);
    let image = shrink_and_combine(&psis, &alpha)?.quantize_8bit();

    let float_image = match alpha_override {
        Some(a) => shrink_and_combine(&analyse(noisy, levels, FilterRealization::Uwt2d)?, a)?,
        None => crate::genre::denoise(noisy, sigma, levels, config, FilterRealization::Uwt2d)?.image,
    }
    .quantize_8bit();
    let psnr_delta = match reference {
        Some(r) => Some(psnr(r, &image, Peak::Dynamic8Bit)? - psnr(r, &float_image, Peak::Dynamic8Bit)?),
        None => None,
    };
    Ok(FixedReport {
        image,
        diagnostics: Diagnostics { alpha, risk, trace, solver, rank_deficient, sigma, levels, realization: FilterRealization::Uwt2d },
        schedule: schedule.kind,
        overflow_count: fixed_psis.overflow_count,
        max_abs_subband_error,
        input_quantized,
        float_image,
        psnr_delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantize_examples() {
        let q72 = QFormat::signed(7, 2);
        assert_eq!(quantize(0.0, q72, Rounding::Truncate).to_f64(), 0.0);
        assert_eq!(quantize(1.30, q72, Rounding::Truncate).to_f64(), 1.25);
        assert_eq!(quantize(-1.30, q72, Rounding::Truncate).to_f64(), -1.5);
        assert_eq!(quantize(1.375, q72, Rounding::Nearest).to_f64(), 1.5);
        assert_eq!(quantize(-1.375, q72, Rounding::Nearest).to_f64(), -1.5);
        for mode in [Rounding::Truncate, Rounding::Nearest] {
            let f = quantize(200.0, q72, mode);
            assert_eq!(f.to_f64(), 127.75);
            assert!(f.overflow);
            let g = quantize(-300.0, q72, mode);
            assert_eq!(g.to_f64(), -128.0);
            assert!(g.overflow);
        }
        let u = QFormat::unsigned(8, 0);
        assert!(quantize(-1.0, u, Rounding::Nearest).overflow);
        assert_eq!(u.max_value(), 255.0);
    }

    #[test]
    fn requantize_matches_quantize() {
        let f = QFormat::signed(7, 2);
        for raw in -600i64..600 {
            let x = raw as f64 / 16.0;
            for mode in [Rounding::Truncate, Rounding::Nearest] {
                assert_eq!(requantize(raw, 4, f, mode), quantize(x, f, mode), "{raw} {mode:?}");
            }
        }
    }

    #[test]
    fn schedules_match_tables() {
        let full = FormatSchedule::full(5).unwrap();
        let trunc = FormatSchedule::truncated(5).unwrap();
        let fr = |v: &[QFormat]| v.iter().map(|f| f.frac_bits).collect::<Vec<_>>();
        assert_eq!(fr(&full.decomposition), [2, 4, 6, 8, 10]);
        assert_eq!(fr(&full.recomposition), [4, 8, 12, 16, 20]);
        assert_eq!(fr(&trunc.decomposition), [2, 4, 6, 6, 6]);
        assert_eq!(fr(&trunc.recomposition), [4, 6, 6, 6, 6]);
        assert!(full.decomposition.iter().chain(&full.recomposition).all(|f| f.signed && f.int_bits == 7));
        assert!(full.decomposition_ll.iter().all(|f| !f.signed && f.int_bits == 8));
        assert!(trunc.recomposition.iter().chain(&trunc.recomposition_ll).all(|f| f.width() <= 16));
        assert_eq!(full.recomposition[4].to_string(), "Q7.20");
        assert!(FormatSchedule::full(7).is_err());
    }

    #[test]
    fn constant_255_keeps_ll_exact() {
        let img = Image::filled(64, 64, 255.0);
        for schedule in [FormatSchedule::full(5).unwrap(), FormatSchedule::truncated(5).unwrap()] {
            let bands = decompose_fixed(&img, &schedule).unwrap();
            assert!(!bands.overflowed());
            let set = bands.to_subbands().unwrap();
            assert!(set.band(5, BandKind::LL).data().iter().all(|v| *v == 255.0));
            assert!(set.band(3, BandKind::HH).data().iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn impulse_level_one_hh() {
        let mut img = Image::zeros(8, 8);
        img.set(0, 0, 255.0);
        let bands = decompose_fixed(&img, &FormatSchedule::truncated(1).unwrap()).unwrap();
        let hh = bands.to_subbands().unwrap().band(1, BandKind::HH).clone();
        assert_eq!(hh.get(0, 0), 63.75);
        assert_eq!(hh.get(1, 1), 63.75);
        assert_eq!(hh.get(0, 1), -63.75);
        assert_eq!(hh.get(1, 0), -63.75);
    }

    #[test]
    fn full_schedule_is_exact() {
        let img = Image::from_fn(32, 32, |r, c| ((r * 31 + c * 17 + r * c) % 256) as f64);
        let schedule = FormatSchedule::full(4).unwrap();
        let fixed = recompose_fixed(&decompose_fixed(&img, &schedule).unwrap(), &schedule).unwrap();
        let float = analyse(&img, 4, FilterRealization::Uwt2d).unwrap();
        for (a, b) in fixed.to_synthesis().unwrap().psis().iter().zip(float.psis()) {
            assert!(a.max_abs_diff(b).unwrap() < 1e-9);
        }
        assert_eq!(fixed.overflow_count, 0);
    }

    #[test]
    fn unit_gains_reproduce_input() {
        let img = Image::from_fn(64, 64, |r, c| ((r * 13 + c * 7 + (r ^ c)) % 256) as f64);
        for schedule in [FormatSchedule::full(5).unwrap(), FormatSchedule::truncated(5).unwrap()] {
            let out = pipeline_fixed(&img, 0.0, &schedule, &SolverConfig::default(), Some(&img), Some(&[1.0; 16])).unwrap();
            assert_eq!(out.image, img, "{:?}", schedule.kind);
            assert_eq!(out.overflow_count, 0);
        }
    }

    #[test]
    fn rejects_non_8bit_input() {
        let img = Image::filled(16, 16, 0.5);
        assert!(decompose_fixed(&img, &FormatSchedule::truncated(2).unwrap()).is_err());
    }
}
