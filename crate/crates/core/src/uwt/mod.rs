//! Undecimated Haar analysis and synthesis filter banks.
//!
//! A `J`-level decomposition yields `3J + 1` subbands, each the same size as
//! the input. They are stored level-major: for each level `1..=J` the bands
//! `LH`, `HL`, `HH`, followed by the level-`J` approximation `LL`. This order
//! fixes the columns of `Psi` and the indices of the shrinkage vector.
//!
//! All convolutions are circular, so every analysis operator `D_i` and
//! synthesis operator `R_i` is (block-)circulant and `sum_i R_i D_i = I`.
//!
//! The same transform can be computed six ways (see [`FilterRealization`]);
//! they differ in arithmetic cost, not in output.

mod combined;
mod individual;
pub mod kernel;
pub(crate) mod ops;
mod recursive;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use self::kernel::{Branch, HaarKernel, KernelForm};
pub use self::ops::AddTally;
use crate::error::{Error, Result};
use crate::image::Image;

/// 2D subband type: the first letter names the vertical (column) filter,
/// the second the horizontal (row) filter; `L` is the refinement filter and
/// `H` the wavelet filter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BandKind {
    LH,
    HL,
    HH,
    LL,
}

impl BandKind {
    pub const DETAILS: [BandKind; 3] = [BandKind::LH, BandKind::HL, BandKind::HH];

    /// `(vertical, horizontal)` branches.
    pub fn branches(self) -> (Branch, Branch) {
        match self {
            BandKind::LH => (Branch::Refinement, Branch::Wavelet),
            BandKind::HL => (Branch::Wavelet, Branch::Refinement),
            BandKind::HH => (Branch::Wavelet, Branch::Wavelet),
            BandKind::LL => (Branch::Refinement, Branch::Refinement),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BandKind::LH => "LH",
            BandKind::HL => "HL",
            BandKind::HH => "HH",
            BandKind::LL => "LL",
        }
    }
}

/// Position of one subband in the frozen ordering.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Band {
    pub level: usize,
    pub kind: BandKind,
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.kind.name(), self.level)
    }
}

/// The band layout for `levels` levels.
pub fn band_layout(levels: usize) -> Vec<Band> {
    let mut bands = Vec::with_capacity(3 * levels + 1);
    for level in 1..=levels {
        for kind in BandKind::DETAILS {
            bands.push(Band { level, kind });
        }
    }
    bands.push(Band { level: levels, kind: BandKind::LL });
    bands
}

#[inline]
pub fn band_count(levels: usize) -> usize {
    3 * levels + 1
}

/// Ways of computing the filter bank.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterRealization {
    /// Separable cascade of two-tap individual filters.
    Uwt1d,
    /// Cascade of four-tap 2D individual kernels sharing `D+-A`, `C+-B`.
    Uwt2d,
    /// Separable combined filters via running-sum recursions.
    Ruwt1d,
    /// `L/2 x L/2` running box sums combined as `D +- A +- B +- C`.
    Ruwt2d,
    /// Separable direct convolution with the combined filters.
    ConvCombined1d,
    /// Direct 2D convolution with the combined `L x L` kernels.
    ConvCombined2d,
}

impl FilterRealization {
    pub const ALL: [FilterRealization; 6] = [
        FilterRealization::Uwt1d,
        FilterRealization::Uwt2d,
        FilterRealization::Ruwt1d,
        FilterRealization::Ruwt2d,
        FilterRealization::ConvCombined1d,
        FilterRealization::ConvCombined2d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FilterRealization::Uwt1d => "uwt-1d",
            FilterRealization::Uwt2d => "uwt-2d",
            FilterRealization::Ruwt1d => "ruwt-1d",
            FilterRealization::Ruwt2d => "ruwt-2d",
            FilterRealization::ConvCombined1d => "conv-1d",
            FilterRealization::ConvCombined2d => "conv-2d",
        }
    }

    pub fn is_2d(self) -> bool {
        matches!(self, FilterRealization::Uwt2d | FilterRealization::Ruwt2d | FilterRealization::ConvCombined2d)
    }
}

impl fmt::Display for FilterRealization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FilterRealization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase();
        FilterRealization::ALL
            .into_iter()
            .find(|r| r.name() == s || s == r.name().replace("conv", "conv-combined"))
            .ok_or(Error::UnknownRealization(s))
    }
}

/// 1D or 2D recursive realization.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    OneD,
    TwoD,
}

/// Analysis output: the `3J + 1` subbands in the frozen order.
#[derive(Clone, Debug, PartialEq)]
pub struct SubbandSet {
    levels: usize,
    bands: Vec<Image>,
}

impl SubbandSet {
    pub fn new(levels: usize, bands: Vec<Image>) -> Result<Self> {
        check_band_shapes(levels, &bands)?;
        Ok(Self { levels, bands })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn bands(&self) -> &[Image] {
        &self.bands
    }

    pub fn into_bands(self) -> Vec<Image> {
        self.bands
    }

    pub fn layout(&self) -> Vec<Band> {
        band_layout(self.levels)
    }

    pub fn width(&self) -> usize {
        self.bands[0].width()
    }

    pub fn height(&self) -> usize {
        self.bands[0].height()
    }

    pub fn band(&self, level: usize, kind: BandKind) -> &Image {
        &self.bands[band_index(self.levels, Band { level, kind })]
    }
}

/// Synthesis images `psi_i = R_i D_i y`: the columns of `Psi`.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthesisImages {
    levels: usize,
    psis: Vec<Image>,
}

impl SynthesisImages {
    pub fn new(levels: usize, psis: Vec<Image>) -> Result<Self> {
        check_band_shapes(levels, &psis)?;
        Ok(Self { levels, psis })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn psis(&self) -> &[Image] {
        &self.psis
    }

    pub fn len(&self) -> usize {
        self.psis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psis.is_empty()
    }

    pub fn width(&self) -> usize {
        self.psis[0].width()
    }

    pub fn height(&self) -> usize {
        self.psis[0].height()
    }

    /// Pixel count `N`.
    pub fn pixels(&self) -> usize {
        self.psis[0].len()
    }

    pub fn psi(&self, level: usize, kind: BandKind) -> &Image {
        &self.psis[band_index(self.levels, Band { level, kind })]
    }

    /// `sum_i psi_i`, which reconstructs the analysed image.
    pub fn sum(&self) -> Image {
        let mut out = Image::zeros(self.width(), self.height());
        for p in &self.psis {
            for (o, v) in out.data_mut().iter_mut().zip(p.data()) {
                *o += v;
            }
        }
        out
    }
}

fn check_band_shapes(levels: usize, bands: &[Image]) -> Result<()> {
    if levels == 0 {
        return Err(Error::ZeroLevels);
    }
    let expected = band_count(levels);
    if bands.len() != expected {
        return Err(Error::BandCount { expected, actual: bands.len() });
    }
    if bands.iter().any(|b| !b.same_shape(&bands[0])) {
        return Err(Error::ShapeMismatch("subbands differ in size".into()));
    }
    Ok(())
}

pub fn band_index(levels: usize, band: Band) -> usize {
    match band.kind {
        BandKind::LL => 3 * levels,
        kind => 3 * (band.level - 1) + BandKind::DETAILS.iter().position(|k| *k == kind).unwrap(),
    }
}

/// Each side must be a positive multiple of `2^levels`.
pub fn check_dimensions(width: usize, height: usize, levels: usize) -> Result<()> {
    if levels == 0 {
        return Err(Error::ZeroLevels);
    }
    if levels >= usize::BITS as usize - 1 {
        return Err(Error::InvalidParameter(format!("{levels} levels")));
    }
    let required = 1usize << levels;
    if width < required || height < required || width % required != 0 || height % required != 0 {
        return Err(Error::ImageTooSmall { width, height, levels, required });
    }
    Ok(())
}

/// Internal per-realization interface. `band_filter` is the causal analysis
/// filter of one band applied to an arbitrary plane; `decompose` may share
/// work between bands.
pub(crate) trait Realization {
    fn decompose(&self, img: &Image, levels: usize, tally: &mut AddTally) -> Vec<Image>;
    fn band_filter(&self, img: &Image, band: Band, tally: &mut AddTally) -> Image;
}

fn realization(r: FilterRealization) -> Box<dyn Realization> {
    match r {
        FilterRealization::Uwt1d => Box::new(individual::Individual1d),
        FilterRealization::Uwt2d => Box::new(individual::Individual2d),
        FilterRealization::Ruwt1d => Box::new(recursive::Recursive1d),
        FilterRealization::Ruwt2d => Box::new(recursive::Recursive2d),
        FilterRealization::ConvCombined1d => Box::new(combined::Combined1d),
        FilterRealization::ConvCombined2d => Box::new(combined::Combined2d),
    }
}

/// Analysis filter bank.
pub fn decompose(img: &Image, levels: usize, realization_tag: FilterRealization) -> Result<SubbandSet> {
    decompose_counted(img, levels, realization_tag, &mut AddTally::new())
}

/// [`decompose`] with every addition recorded per level.
pub fn decompose_counted(img: &Image, levels: usize, realization_tag: FilterRealization, tally: &mut AddTally) -> Result<SubbandSet> {
    check_dimensions(img.width(), img.height(), levels)?;
    let bands = realization(realization_tag).decompose(img, levels, tally);
    SubbandSet::new(levels, bands)
}

/// Analysis through the running-sum recursions.
pub fn decompose_recursive(img: &Image, levels: usize, domain: Domain) -> Result<SubbandSet> {
    let tag = match domain {
        Domain::OneD => FilterRealization::Ruwt1d,
        Domain::TwoD => FilterRealization::Ruwt2d,
    };
    decompose(img, levels, tag)
}

/// Passes every band through its synthesis filter (the flipped analysis
/// filter), yielding `psi_i = R_i D_i y` without shrinkage.
pub fn recompose(bands: &SubbandSet, realization_tag: FilterRealization) -> Result<SynthesisImages> {
    recompose_counted(bands, realization_tag, &mut AddTally::new())
}

pub fn recompose_counted(bands: &SubbandSet, realization_tag: FilterRealization, tally: &mut AddTally) -> Result<SynthesisImages> {
    let levels = bands.levels();
    check_dimensions(bands.width(), bands.height(), levels)?;
    let r = realization(realization_tag);
    let psis = band_layout(levels).into_iter().zip(bands.bands()).map(|(band, img)| synthesize(r.as_ref(), img, band, tally)).collect();
    SynthesisImages::new(levels, psis)
}

/// Inverse transform merging every band into one image. The individual-filter
/// realizations run the level-by-level inverse; the others sum their synthesis
/// images.
pub fn reconstruct(bands: &SubbandSet, realization_tag: FilterRealization) -> Result<Image> {
    reconstruct_counted(bands, realization_tag, &mut AddTally::new())
}

pub fn reconstruct_counted(bands: &SubbandSet, realization_tag: FilterRealization, tally: &mut AddTally) -> Result<Image> {
    let (w, h, levels) = (bands.width(), bands.height(), bands.levels());
    check_dimensions(w, h, levels)?;
    match realization_tag {
        FilterRealization::Uwt1d | FilterRealization::Uwt2d => {
            let two_d = realization_tag == FilterRealization::Uwt2d;
            Image::new(w, h, individual::inverse(bands.bands(), levels, two_d, tally))
        }
        _ => Ok(recompose_counted(bands, realization_tag, tally)?.sum()),
    }
}

/// `R y` for one band: the causal filter conjugated by circular reversal.
pub(crate) fn synthesize(r: &dyn Realization, img: &Image, band: Band, tally: &mut AddTally) -> Image {
    let (w, h) = (img.width(), img.height());
    let rev = Image::new(w, h, ops::reverse2d(img.data(), w, h)).expect("same shape");
    let filtered = r.band_filter(&rev, band, tally);
    Image::new(w, h, ops::reverse2d(filtered.data(), w, h)).expect("same shape")
}

/// Synthesis images of `img` in one call.
pub fn analyse(img: &Image, levels: usize, realization_tag: FilterRealization) -> Result<SynthesisImages> {
    recompose(&decompose(img, levels, realization_tag)?, realization_tag)
}

/// `x_hat = sum_i alpha_i psi_i`.
pub fn shrink_and_combine(psis: &SynthesisImages, alpha: &[f64]) -> Result<Image> {
    if alpha.len() != psis.len() {
        return Err(Error::BandCount { expected: psis.len(), actual: alpha.len() });
    }
    let mut out = Image::zeros(psis.width(), psis.height());
    for (p, &a) in psis.psis().iter().zip(alpha) {
        if a == 0.0 {
            continue;
        }
        for (o, v) in out.data_mut().iter_mut().zip(p.data()) {
            *o += a * v;
        }
    }
    Ok(out)
}
