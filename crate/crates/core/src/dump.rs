//! Binary subband dump.
//!
//! Layout, all little-endian: magic `b"GRSB"`, width `u32`, height `u32`, band
//! count `u32`, then one `f32` plane per band in subband order, row-major.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::image::Image;

pub const MAGIC: [u8; 4] = *b"GRSB";
pub const HEADER_LEN: usize = 16;

fn io_err(e: std::io::Error) -> Error {
    Error::MalformedDump(e.to_string())
}

/// Writes planes of equal size.
pub fn write_dump<W: Write>(mut out: W, bands: &[Image]) -> Result<()> {
    let first = bands.first().ok_or_else(|| Error::MalformedDump("no bands to write".into()))?;
    if bands.iter().any(|b| !b.same_shape(first)) {
        return Err(Error::ShapeMismatch("subbands differ in size".into()));
    }
    let dim = |v: usize| u32::try_from(v).map_err(|_| Error::MalformedDump(format!("{v} does not fit in 32 bits")));
    let mut header = Vec::with_capacity(HEADER_LEN);
    header.extend_from_slice(&MAGIC);
    header.extend_from_slice(&dim(first.width())?.to_le_bytes());
    header.extend_from_slice(&dim(first.height())?.to_le_bytes());
    header.extend_from_slice(&dim(bands.len())?.to_le_bytes());
    out.write_all(&header).map_err(io_err)?;
    let mut buf = Vec::with_capacity(first.len() * 4);
    for band in bands {
        buf.clear();
        for &v in band.data() {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
        out.write_all(&buf).map_err(io_err)?;
    }
    Ok(())
}

/// Reads a dump back as `f64` planes.
pub fn read_dump<R: Read>(mut input: R) -> Result<Vec<Image>> {
    let mut header = [0u8; HEADER_LEN];
    input.read_exact(&mut header).map_err(|_| Error::MalformedDump("truncated header".into()))?;
    if header[..4] != MAGIC {
        return Err(Error::MalformedDump("bad magic".into()));
    }
    let field = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().expect("four bytes")) as usize;
    let (w, h, count) = (field(4), field(8), field(12));
    let plane = w.checked_mul(h).filter(|&n| n > 0).ok_or_else(|| Error::MalformedDump(format!("bad size {w}x{h}")))?;
    let mut bands = Vec::with_capacity(count.min(1024));
    let mut raw = vec![0u8; plane * 4];
    for i in 0..count {
        input.read_exact(&mut raw).map_err(|_| Error::MalformedDump(format!("truncated payload in band {i}")))?;
        let data = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("four bytes")) as f64).collect();
        bands.push(Image::new(w, h, data)?);
    }
    let mut rest = [0u8; 1];
    if input.read(&mut rest).map_err(io_err)? != 0 {
        return Err(Error::MalformedDump("trailing bytes after last band".into()));
    }
    Ok(bands)
}
