//! Netpbm graymap (P2/P5) and bitmap (P1/P4) codecs.
//!
//! Graymaps must use maxval 255. Bitmaps keep the Netpbm convention that 1 is
//! black. Writers emit no comments and always produce the canonical
//! `magic\nwidth height\n[maxval\n]` header.

use thiserror::Error;

use crate::watermark::{BitMatrix, GrayImage};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PnmError {
    #[error("unrecognized magic number (expected {expected})")]
    BadMagic { expected: &'static str },
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("unsupported maxval {0} (only 255 is supported)")]
    UnsupportedMaxval(u32),
    #[error("truncated payload: expected {expected} samples, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("invalid sample: {0}")]
    InvalidSample(String),
    #[error("image dimensions must be nonzero")]
    EmptyDims,
}

type Result<T> = std::result::Result<T, PnmError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    /// ASCII bitmap.
    P1,
    /// ASCII graymap.
    P2,
    /// Packed bitmap.
    P4,
    /// Binary graymap.
    P5,
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(data: &'a [u8]) -> Self {
        Self { data, pos: 0 }
    }

    /// Skips whitespace and `#` comments.
    fn skip_space(&mut self) {
        while let Some(&b) = self.data.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.data.get(self.pos) {
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn header_number(&mut self, what: &str) -> Result<u32> {
        self.skip_space();
        let start = self.pos;
        while self.data.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(PnmError::MalformedHeader(format!("missing {what}")));
        }
        std::str::from_utf8(&self.data[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| PnmError::MalformedHeader(format!("{what} out of range")))
    }

    /// Consumes the single whitespace byte that ends a binary header.
    fn end_of_header(&mut self) -> Result<()> {
        match self.data.get(self.pos) {
            Some(b) if b.is_ascii_whitespace() => {
                self.pos += 1;
                Ok(())
            }
            Some(_) => Err(PnmError::MalformedHeader(
                "expected whitespace after header".into(),
            )),
            None => Err(PnmError::Truncated {
                expected: 1,
                found: 0,
            }),
        }
    }

    fn rest(&self) -> &'a [u8] {
        &self.data[self.pos.min(self.data.len())..]
    }
}

fn magic(c: &mut Cursor<'_>) -> Option<Format> {
    let m = c.data.get(..2)?;
    let f = match m {
        b"P1" => Format::P1,
        b"P2" => Format::P2,
        b"P4" => Format::P4,
        b"P5" => Format::P5,
        _ => return None,
    };
    c.pos = 2;
    Some(f)
}

fn dims(c: &mut Cursor<'_>) -> Result<(usize, usize)> {
    let w = c.header_number("width")? as usize;
    let h = c.header_number("height")? as usize;
    if w == 0 || h == 0 {
        return Err(PnmError::EmptyDims);
    }
    Ok((w, h))
}

/// Parses a P2 or P5 graymap with maxval 255.
pub fn read_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut c = Cursor::new(bytes);
    let format = match magic(&mut c) {
        Some(f @ (Format::P2 | Format::P5)) => f,
        _ => {
            return Err(PnmError::BadMagic {
                expected: "P2 or P5",
            })
        }
    };
    let (w, h) = dims(&mut c)?;
    let maxval = c.header_number("maxval")?;
    if maxval != 255 {
        return Err(PnmError::UnsupportedMaxval(maxval));
    }
    let n = w * h;
    let pixels = match format {
        Format::P5 => {
            c.end_of_header()?;
            let rest = c.rest();
            if rest.len() < n {
                return Err(PnmError::Truncated {
                    expected: n,
                    found: rest.len(),
                });
            }
            rest[..n].to_vec()
        }
        _ => {
            let mut pixels = Vec::with_capacity(n);
            for found in 0..n {
                c.skip_space();
                if c.rest().is_empty() {
                    return Err(PnmError::Truncated { expected: n, found });
                }
                let v = c
                    .header_number("sample")
                    .map_err(|_| PnmError::InvalidSample(format!("sample {found}")))?;
                if v > 255 {
                    return Err(PnmError::InvalidSample(format!("{v} exceeds maxval")));
                }
                pixels.push(v as u8);
            }
            pixels
        }
    };
    Ok(GrayImage::new(w, h, pixels).expect("length checked"))
}

/// Serializes as P5 (binary) or P2 (ASCII).
pub fn write_pgm(img: &GrayImage, ascii: bool) -> Vec<u8> {
    let (w, h) = (img.width(), img.height());
    if !ascii {
        let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
        out.extend_from_slice(img.pixels());
        return out;
    }
    let mut out = format!("P2\n{w} {h}\n255\n");
    for row in img.pixels().chunks(w) {
        // keep lines under 70 characters
        for (i, line) in row.chunks(17).enumerate() {
            if i > 0 {
                out.push('\n');
            }
            let items: Vec<String> = line.iter().map(u8::to_string).collect();
            out.push_str(&items.join(" "));
        }
        out.push('\n');
    }
    out.into_bytes()
}

/// Parses a P1 or P4 bitmap.
pub fn read_pbm(bytes: &[u8]) -> Result<BitMatrix> {
    let mut c = Cursor::new(bytes);
    let format = match magic(&mut c) {
        Some(f @ (Format::P1 | Format::P4)) => f,
        _ => {
            return Err(PnmError::BadMagic {
                expected: "P1 or P4",
            })
        }
    };
    let (w, h) = dims(&mut c)?;
    let n = w * h;
    let mut bits = Vec::with_capacity(n);
    match format {
        Format::P4 => {
            c.end_of_header()?;
            let stride = w.div_ceil(8);
            let rest = c.rest();
            if rest.len() < stride * h {
                return Err(PnmError::Truncated {
                    expected: stride * h,
                    found: rest.len(),
                });
            }
            for row in rest[..stride * h].chunks(stride) {
                bits.extend((0..w).map(|x| (row[x / 8] >> (7 - x % 8)) & 1));
            }
        }
        _ => {
            // P1 samples are single characters and need no separators.
            while bits.len() < n {
                c.skip_space();
                match c.rest().first() {
                    Some(b'0') => bits.push(0),
                    Some(b'1') => bits.push(1),
                    Some(&other) => {
                        return Err(PnmError::InvalidSample(format!(
                            "unexpected byte {other:#04x} in bitmap"
                        )))
                    }
                    None => {
                        return Err(PnmError::Truncated {
                            expected: n,
                            found: bits.len(),
                        })
                    }
                }
                c.pos += 1;
            }
        }
    }
    Ok(BitMatrix::new(w, h, bits).expect("length checked"))
}

/// Serializes as P4 (packed) or P1 (ASCII).
pub fn write_pbm(mark: &BitMatrix, ascii: bool) -> Vec<u8> {
    let (w, h) = (mark.cols(), mark.rows());
    if ascii {
        let mut out = format!("P1\n{w} {h}\n");
        for row in mark.bits().chunks(w) {
            for (i, line) in row.chunks(35).enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                let items: Vec<&str> = line
                    .iter()
                    .map(|&b| if b == 1 { "1" } else { "0" })
                    .collect();
                out.push_str(&items.join(" "));
            }
            out.push('\n');
        }
        return out.into_bytes();
    }
    let mut out = format!("P4\n{w} {h}\n").into_bytes();
    for row in mark.bits().chunks(w) {
        for byte_bits in row.chunks(8) {
            let mut byte = 0u8;
            for (i, &b) in byte_bits.iter().enumerate() {
                byte |= (b & 1) << (7 - i);
            }
            out.push(byte);
        }
    }
    out
}
