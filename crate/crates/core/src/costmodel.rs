//! Adder and block-RAM cost of each filter-bank realization.
//!
//! Addition counts are exact rationals per output pixel. Memory is modelled
//! from a buffer inventory per realization and phase: each line buffer is
//! rounded up to half blocks (one 18 Kb primitive), streams read with the same
//! address share one wider buffer, and delays no longer than the filter
//! itself live in distributed RAM.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::uwt::FilterRealization;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Decomposition,
    Recomposition,
}

impl Phase {
    pub const ALL: [Phase; 2] = [Phase::Decomposition, Phase::Recomposition];

    pub fn name(self) -> &'static str {
        match self {
            Phase::Decomposition => "decomposition",
            Phase::Recomposition => "recomposition",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "decomposition" | "dec" => Ok(Phase::Decomposition),
            "recomposition" | "rec" => Ok(Phase::Recomposition),
            other => Err(Error::InvalidParameter(format!("unknown phase {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CostQuery {
    pub realization: FilterRealization,
    pub phase: Phase,
    pub level: usize,
    pub image_width: usize,
    pub bit_width: u32,
    /// Capacity of one block RAM.
    pub bram_bits: u64,
}

impl CostQuery {
    pub const DEFAULT_WIDTH: usize = 512;
    pub const DEFAULT_BIT_WIDTH: u32 = 16;
    pub const DEFAULT_BRAM_BITS: u64 = 36 * 1024;

    pub fn new(realization: FilterRealization, phase: Phase, level: usize) -> Self {
        Self {
            realization,
            phase,
            level,
            image_width: Self::DEFAULT_WIDTH,
            bit_width: Self::DEFAULT_BIT_WIDTH,
            bram_bits: Self::DEFAULT_BRAM_BITS,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.level == 0 || self.level > 16 {
            return Err(Error::UnsupportedQuery(format!("level {} outside 1..=16", self.level)));
        }
        if self.image_width == 0 || self.bit_width == 0 || self.bram_bits < 2 {
            return Err(Error::UnsupportedQuery("width, bit width and block size must be positive".into()));
        }
        Ok(())
    }

    /// Filter length `L = 2^level`.
    pub fn filter_len(&self) -> u64 {
        1 << self.level
    }
}

/// Average additions per output pixel.
pub fn additions_per_pixel(q: &CostQuery) -> Result<Ratio<u64>> {
    q.validate()?;
    let l = q.filter_len();
    use FilterRealization::*;
    use Phase::*;
    Ok(match (q.realization, q.phase) {
        (Uwt1d, Decomposition) => Ratio::new(6, 4),
        (Uwt1d, Recomposition) => Ratio::from_integer(6),
        (Uwt2d, Decomposition) => Ratio::from_integer(2),
        (Uwt2d, Recomposition) => Ratio::from_integer(12),
        // two row filters shared by four column filters, L - 1 additions each
        (ConvCombined1d, Decomposition) => Ratio::new(6 * (l - 1), 4),
        // one row and one column filter per band
        (ConvCombined1d, Recomposition) => Ratio::from_integer(2 * (l - 1)),
        (ConvCombined2d, _) => Ratio::from_integer(l * l - 1),
        // row box 2 + row wavelet 3, columns 2 + 3 on each: 15 over 4 bands
        (Ruwt1d, Decomposition) => Ratio::new(15, 4),
        // LL 4, LH 5, HL 5, HH 6
        (Ruwt1d, Recomposition) => Ratio::from_integer(5),
        // shared box sum 4, then 3 per band
        (Ruwt2d, Decomposition) => Ratio::new(4 + 3 * 4, 4),
        (Ruwt2d, Recomposition) => Ratio::from_integer(4 + 3),
    })
}

/// One line or delay buffer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Buffer {
    pub name: &'static str,
    /// Depth in samples.
    pub words: u64,
    /// Same-address streams stored side by side in one word.
    pub streams: u64,
    /// Short delay held in distributed RAM.
    pub distributed: bool,
}

impl Buffer {
    fn line(name: &'static str, words: u64, streams: u64) -> Self {
        Self { name, words, streams, distributed: false }
    }

    fn short(name: &'static str, words: u64) -> Self {
        Self { name, words, streams: 1, distributed: true }
    }

    pub fn bits(&self, bit_width: u32) -> u64 {
        self.words * self.streams * u64::from(bit_width)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BramCount {
    /// Block RAMs in half-block steps, e.g. `15/2`.
    pub blocks: Ratio<u64>,
    /// Whole blocks a placer would reserve.
    pub physical: u64,
    pub buffers: Vec<Buffer>,
}

/// Buffers held by `realization` in `phase` at one level.
pub fn buffer_inventory(q: &CostQuery) -> Result<Vec<Buffer>> {
    q.validate()?;
    let l = q.filter_len();
    let w = q.image_width as u64;
    use FilterRealization::*;
    use Phase::*;
    Ok(match (q.realization, q.phase) {
        (Uwt1d, Decomposition) => {
            vec![Buffer::short("row delay", l / 2), Buffer::line("column delay, refinement and wavelet rows", l / 2 * w, 2)]
        }
        (Uwt2d, Decomposition) => vec![Buffer::short("sample delay", l / 2), Buffer::line("line delay", l / 2 * w, 1)],
        (Uwt1d | Uwt2d, Recomposition) => vec![
            Buffer::short("sample delay", l / 2),
            Buffer::line("line delay, LH and HL", l / 2 * w, 2),
            Buffer::line("line delay, HH and LL", l / 2 * w, 2),
        ],
        (Ruwt1d, Decomposition) => vec![
            Buffer::short("row window", l),
            Buffer::line("column window, box rows", l * w, 1),
            Buffer::line("column window, wavelet rows", l * w, 1),
            Buffer::line("column accumulator LL", w, 1),
            Buffer::line("column accumulator LH", w, 1),
            Buffer::line("column accumulator HL", w, 1),
            Buffer::line("column accumulator HH", w, 1),
        ],
        (Ruwt1d, Recomposition) => {
            let mut v = vec![Buffer::short("row window", l)];
            v.extend(
                ["column window LL", "column window LH", "column window HL", "column window HH"]
                    .into_iter()
                    .map(|n| Buffer::line(n, l * w, 1)),
            );
            v.extend(
                ["column accumulator LL", "column accumulator LH", "column accumulator HL", "column accumulator HH"]
                    .into_iter()
                    .map(|n| Buffer::line(n, w, 1)),
            );
            v
        }
        (Ruwt2d, Decomposition) => vec![
            Buffer::short("row window", l / 2),
            Buffer::line("box window and input delay", l / 2 * w, 2),
            Buffer::line("box output delay and column accumulator", l / 2 * w, 2),
        ],
        (Ruwt2d, Recomposition) => {
            let mut v = vec![Buffer::short("row window", l / 2)];
            for n in ["box window and input delay", "box output delay and column accumulator"] {
                v.push(Buffer::line(n, l / 2 * w, 2));
                v.push(Buffer::line(n, l / 2 * w, 2));
            }
            v
        }
        (ConvCombined1d | ConvCombined2d, _) => return Err(Error::UnsupportedQuery(format!("no memory model for {}", q.realization))),
    })
}

/// Block RAMs needed by one level of a realization.
pub fn bram_count(q: &CostQuery) -> Result<BramCount> {
    let buffers = buffer_inventory(q)?;
    let half = q.bram_bits / 2;
    let halves: u64 = buffers.iter().filter(|b| !b.distributed).map(|b| b.bits(q.bit_width).div_ceil(half)).sum();
    let blocks = Ratio::new(halves, 2);
    Ok(BramCount { physical: blocks.ceil().to_integer(), blocks, buffers })
}

pub fn ratio_to_f64(r: Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// `p/q` as a decimal with two places, the way cost tables print.
pub fn format_ratio(r: Ratio<u64>) -> String {
    format!("{:.2}", ratio_to_f64(r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use FilterRealization::*;

    fn adds(r: FilterRealization, p: Phase, level: usize) -> Ratio<u64> {
        additions_per_pixel(&CostQuery::new(r, p, level)).unwrap()
    }

    #[test]
    fn level_five_additions() {
        assert_eq!(adds(Uwt2d, Phase::Decomposition, 5), Ratio::from_integer(2));
        assert_eq!(adds(ConvCombined2d, Phase::Recomposition, 5), Ratio::from_integer(1023));
        assert_eq!(adds(ConvCombined1d, Phase::Decomposition, 5), Ratio::new(93, 2));
        assert_eq!(adds(ConvCombined1d, Phase::Recomposition, 5), Ratio::from_integer(62));
        assert_eq!(format_ratio(adds(Ruwt1d, Phase::Decomposition, 5)), "3.75");
    }

    #[test]
    fn seven_and_a_half_blocks() {
        let c = bram_count(&CostQuery::new(Uwt1d, Phase::Decomposition, 5)).unwrap();
        assert_eq!(c.blocks, Ratio::new(15, 2));
        assert_eq!(c.physical, 8);
    }

    #[test]
    fn convolution_has_no_memory_model() {
        assert!(matches!(bram_count(&CostQuery::new(ConvCombined2d, Phase::Decomposition, 5)), Err(Error::UnsupportedQuery(_))));
        assert!(additions_per_pixel(&CostQuery::new(Uwt2d, Phase::Decomposition, 0)).is_err());
    }

    #[test]
    fn level_one_uwt_fits_one_block() {
        for r in [Uwt1d, Uwt2d] {
            let c = bram_count(&CostQuery::new(r, Phase::Decomposition, 1)).unwrap();
            assert!(c.physical <= 1, "{r}");
        }
    }
}
