//! PGM (P2/P5) and grayscale PNG input, P5 and PNG output.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use genre_core::Image;

#[derive(Debug, thiserror::Error)]
pub enum ImageIoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed PGM header: {0}")]
    MalformedHeader(String),
    #[error("unsupported bit depth: {0}")]
    BitDepth(String),
    #[error("truncated payload: expected {expected} samples, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("unsupported image: {0}")]
    Unsupported(String),
    #[error("PNG: {0}")]
    Png(String),
}

const PNG_SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', 0x0d, 0x0a, 0x1a, 0x0a];

/// Largest accepted side, guarding against absurd headers.
pub const MAX_SIDE: usize = 1 << 15;

pub fn read_image(path: &Path) -> Result<Image, ImageIoError> {
    let bytes = fs::read(path).map_err(|source| ImageIoError::Io { path: path.to_path_buf(), source })?;
    decode(&bytes)
}

pub fn decode(bytes: &[u8]) -> Result<Image, ImageIoError> {
    if bytes.starts_with(&PNG_SIGNATURE) {
        decode_png(bytes)
    } else if bytes.starts_with(b"P2") || bytes.starts_with(b"P5") {
        decode_pgm(bytes)
    } else {
        Err(ImageIoError::Unsupported("expected a P2/P5 PGM or a PNG file".into()))
    }
}

/// Header tokenizer: whitespace separated, `#` comments to end of line.
struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Header<'a> {
    fn skip_space(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn token(&mut self) -> Option<&'a [u8]> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() && self.bytes[self.pos] != b'#' {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn number(&mut self, what: &str) -> Result<usize, ImageIoError> {
        let tok = self.token().ok_or_else(|| ImageIoError::MalformedHeader(format!("missing {what}")))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| ImageIoError::MalformedHeader(format!("bad {what} {:?}", String::from_utf8_lossy(tok))))
    }
}

fn decode_pgm(bytes: &[u8]) -> Result<Image, ImageIoError> {
    let mut h = Header { bytes, pos: 2 };
    let ascii = bytes[1] == b'2';
    let width = h.number("width")?;
    let height = h.number("height")?;
    let maxval = h.number("maxval")?;
    if width == 0 || height == 0 || width > MAX_SIDE || height > MAX_SIDE {
        return Err(ImageIoError::MalformedHeader(format!("dimensions {width}x{height}")));
    }
    if maxval == 0 || maxval > 255 {
        return Err(ImageIoError::BitDepth(format!("maxval {maxval}; only 8-bit PGM is supported")));
    }
    let expected = width * height;
    let mut data = Vec::with_capacity(expected);
    if ascii {
        while data.len() < expected {
            let Some(tok) = h.token() else { break };
            let v: usize = std::str::from_utf8(tok)
                .ok()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| ImageIoError::MalformedHeader(format!("bad sample {:?}", String::from_utf8_lossy(tok))))?;
            if v > maxval {
                return Err(ImageIoError::BitDepth(format!("sample {v} exceeds maxval {maxval}")));
            }
            data.push(v as f64);
        }
    } else {
        // exactly one whitespace byte separates maxval from the raster
        let start = h.pos + 1;
        let payload = bytes.get(start..).unwrap_or(&[]);
        data.extend(payload.iter().take(expected).map(|&b| f64::from(b)));
        if let Some(&v) = payload.iter().take(expected).find(|&&b| usize::from(b) > maxval) {
            return Err(ImageIoError::BitDepth(format!("sample {v} exceeds maxval {maxval}")));
        }
    }
    if data.len() < expected {
        return Err(ImageIoError::Truncated { expected, found: data.len() });
    }
    if maxval != 255 {
        let s = 255.0 / maxval as f64;
        data.iter_mut().for_each(|v| *v = (*v * s).round());
    }
    Image::new(width, height, data).map_err(|e| ImageIoError::MalformedHeader(e.to_string()))
}

fn decode_png(bytes: &[u8]) -> Result<Image, ImageIoError> {
    let decoder = png::Decoder::new(bytes);
    let mut reader = decoder.read_info().map_err(|e| ImageIoError::Png(e.to_string()))?;
    let info = reader.info();
    if info.color_type != png::ColorType::Grayscale {
        return Err(ImageIoError::Unsupported(format!("PNG color type {:?}; expected grayscale", info.color_type)));
    }
    if info.bit_depth != png::BitDepth::Eight {
        return Err(ImageIoError::BitDepth(format!("PNG bit depth {:?}; expected 8", info.bit_depth)));
    }
    let (width, height) = (info.width as usize, info.height as usize);
    if width > MAX_SIDE || height > MAX_SIDE {
        return Err(ImageIoError::Unsupported(format!("dimensions {width}x{height}")));
    }
    let mut buf = vec![0; reader.output_buffer_size()];
    let frame = reader.next_frame(&mut buf).map_err(|e| ImageIoError::Png(e.to_string()))?;
    let mut data = Vec::with_capacity(width * height);
    for row in buf[..frame.buffer_size()].chunks_exact(frame.line_size).take(height) {
        data.extend(row[..width].iter().map(|&b| f64::from(b)));
    }
    Image::new(width, height, data).map_err(|e| ImageIoError::Png(e.to_string()))
}

/// Binary P5, maxval 255. Samples are rounded and clipped.
pub fn encode_pgm(img: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.to_u8());
    out
}

pub fn encode_png(img: &Image) -> Result<Vec<u8>, ImageIoError> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(BufWriter::new(&mut out), img.width() as u32, img.height() as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        let mut w = enc.write_header().map_err(|e| ImageIoError::Png(e.to_string()))?;
        w.write_image_data(&img.to_u8()).map_err(|e| ImageIoError::Png(e.to_string()))?;
    }
    Ok(out)
}

/// Format chosen by extension: `.png` writes PNG, anything else P5.
pub fn write_image(img: &Image, path: &Path) -> Result<(), ImageIoError> {
    let is_png = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png"));
    let bytes = if is_png { encode_png(img)? } else { encode_pgm(img) };
    fs::write(path, bytes).map_err(|source| ImageIoError::Io { path: path.to_path_buf(), source })
}

/// Image files of a directory in name order, or the paths themselves.
pub fn expand_inputs(paths: &[PathBuf]) -> Result<Vec<PathBuf>, ImageIoError> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut entries: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|source| ImageIoError::Io { path: p.clone(), source })?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|e| {
                    e.extension().and_then(|x| x.to_str()).is_some_and(|x| matches!(x.to_ascii_lowercase().as_str(), "pgm" | "png"))
                })
                .collect();
            entries.sort();
            out.extend(entries);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

/// Mirror-extends (edge sample not repeated) to multiples of `multiple`.
pub fn pad_reflect(img: &Image, multiple: usize) -> Image {
    let up = |v: usize| v.div_ceil(multiple) * multiple;
    let (w, h) = (img.width(), img.height());
    let reflect = |i: usize, n: usize| {
        if n == 1 {
            return 0;
        }
        let period = 2 * (n - 1);
        let m = i % period;
        if m < n {
            m
        } else {
            period - m
        }
    };
    Image::from_fn(up(w), up(h), |r, c| img.get(reflect(r, h), reflect(c, w)))
}

/// Top-left `width x height` window.
pub fn crop(img: &Image, width: usize, height: usize) -> Image {
    Image::from_fn(width, height, |r, c| img.get(r, c))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p5_and_p2_agree() {
        let mut p5 = b"P5\n2 2\n255\n".to_vec();
        p5.extend([0u8, 255, 17, 42]);
        let a = decode(&p5).unwrap();
        assert_eq!(a.data(), &[0.0, 255.0, 17.0, 42.0]);
        let p2 = b"P2\n# comment\n2 2\n255\n0 255\n17 42\n";
        assert_eq!(decode(p2).unwrap(), a);
    }

    #[test]
    fn distinct_errors() {
        assert!(matches!(decode(b"P5\n2 x\n255\n"), Err(ImageIoError::MalformedHeader(_))));
        assert!(matches!(decode(b"P5\n2 2\n65535\n"), Err(ImageIoError::BitDepth(_))));
        assert!(matches!(decode(b"P5\n2 2\n255\n\x01\x02"), Err(ImageIoError::Truncated { expected: 4, found: 2 })));
        assert!(matches!(decode(b"GIF89a"), Err(ImageIoError::Unsupported(_))));
    }

    #[test]
    fn reflect_padding() {
        let img = Image::from_fn(3, 1, |_, c| c as f64);
        let p = pad_reflect(&img, 4);
        assert_eq!((p.width(), p.height()), (4, 4));
        assert_eq!(&p.data()[..4], &[0.0, 1.0, 2.0, 1.0]);
        assert_eq!(crop(&p, 3, 1), img);
    }
}
