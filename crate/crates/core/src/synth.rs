//! Synthetic cover images.
//!
//! Specified as `synth:<kind>:<W>x<H>[:<seed>]`:
//!
//! - `flat`: constant 128.
//! - `gradient`: horizontal ramp from 0 to 255.
//! - `checker`: 8x8 board of 64/192 squares (cells of `W/8 x H/8`).
//! - `texture`: smooth shading (six plane waves, wavelengths 128-512 px) plus
//!   +-2 grain.
//! - `busy`: denser shading (eight plane waves, wavelengths 24-256 px) plus
//!   +-3 grain; stands in for a detailed photograph.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::prng::XorShift64Star;
use crate::watermark::{parse_dims, GrayImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    Flat,
    Gradient,
    Checker,
    Texture,
    Busy,
}

impl SynthKind {
    /// Whether the image depends on the seed.
    pub fn is_random(self) -> bool {
        matches!(self, SynthKind::Texture | SynthKind::Busy)
    }
}

impl fmt::Display for SynthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SynthKind::Flat => "flat",
            SynthKind::Gradient => "gradient",
            SynthKind::Checker => "checker",
            SynthKind::Texture => "texture",
            SynthKind::Busy => "busy",
        })
    }
}

impl FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "flat" => SynthKind::Flat,
            "gradient" => SynthKind::Gradient,
            "checker" => SynthKind::Checker,
            "texture" => SynthKind::Texture,
            "busy" => SynthKind::Busy,
            _ => return Err(Error::CoverSpec(format!("unknown synthetic cover {s:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthSpec {
    pub kind: SynthKind,
    pub width: usize,
    pub height: usize,
    pub seed: u64,
}

impl FromStr for SynthSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let rest = s
            .strip_prefix("synth:")
            .ok_or_else(|| Error::CoverSpec(format!("{s:?} does not start with synth:")))?;
        let mut parts = rest.split(':');
        let kind = parts.next().unwrap_or_default().parse()?;
        let (width, height) = parse_dims(parts.next().unwrap_or_default())
            .map_err(|_| Error::CoverSpec(format!("bad dimensions in {s:?}")))?;
        let seed = match parts.next() {
            Some(seed) => seed
                .parse()
                .map_err(|_| Error::CoverSpec(format!("bad seed in {s:?}")))?,
            None => 0,
        };
        if parts.next().is_some() {
            return Err(Error::CoverSpec(format!("trailing fields in {s:?}")));
        }
        Ok(Self {
            kind,
            width,
            height,
            seed,
        })
    }
}

impl fmt::Display for SynthSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "synth:{}:{}x{}", self.kind, self.width, self.height)?;
        if self.kind.is_random() {
            write!(f, ":{}", self.seed)?;
        }
        Ok(())
    }
}

impl SynthSpec {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn render(&self) -> Result<GrayImage> {
        let (w, h) = (self.width, self.height);
        if w == 0 || h == 0 {
            return Err(Error::Dimension("image dimensions must be nonzero".into()));
        }
        let pixels = match self.kind {
            SynthKind::Flat => vec![128; w * h],
            SynthKind::Gradient => (0..w * h)
                .map(|j| {
                    let x = j % w;
                    if w == 1 {
                        0
                    } else {
                        ((x * 255) as f64 / (w - 1) as f64).round() as u8
                    }
                })
                .collect(),
            SynthKind::Checker => {
                let (cw, ch) = ((w / 8).max(1), (h / 8).max(1));
                (0..w * h)
                    .map(|j| {
                        if ((j % w) / cw + (j / w) / ch) % 2 == 0 {
                            64
                        } else {
                            192
                        }
                    })
                    .collect()
            }
            SynthKind::Texture => shaded(w, h, self.seed, 6, (128.0, 512.0), (10.0, 25.0), 2),
            SynthKind::Busy => shaded(w, h, self.seed, 8, (24.0, 256.0), (5.0, 15.0), 3),
        };
        GrayImage::new(w, h, pixels)
    }
}

/// Sum of random plane waves around 128 plus uniform integer grain.
fn shaded(
    w: usize,
    h: usize,
    seed: u64,
    waves: usize,
    wavelength: (f64, f64),
    amplitude: (f64, f64),
    grain: i64,
) -> Vec<u8> {
    let mut rng = XorShift64Star::new(seed);
    let params: Vec<(f64, f64, f64, f64)> = (0..waves)
        .map(|_| {
            let wl = rng.uniform(wavelength.0, wavelength.1);
            let theta = rng.uniform(0.0, 2.0 * PI);
            let phase = rng.uniform(0.0, 2.0 * PI);
            let amp = rng.uniform(amplitude.0, amplitude.1);
            (
                2.0 * PI * theta.cos() / wl,
                2.0 * PI * theta.sin() / wl,
                phase,
                amp,
            )
        })
        .collect();
    (0..w * h)
        .map(|j| {
            let (x, y) = ((j % w) as f64, (j / w) as f64);
            let v = 128.0
                + params
                    .iter()
                    .map(|&(fx, fy, ph, a)| a * (fx * x + fy * y + ph).cos())
                    .sum::<f64>();
            let v = v.round() as i64 + rng.range_inclusive(-grain, grain);
            v.clamp(0, 255) as u8
        })
        .collect()
}
