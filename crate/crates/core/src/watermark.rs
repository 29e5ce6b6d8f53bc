//! Block-based spread-spectrum embedding and correlation extraction.
//!
//! Each watermark bit owns one rectangular block of the cover, in row-major
//! order. Blocks whose bit is 1 (black) receive `cover + k * chip`, where the
//! chips are one period of the spreading sequence rotated by that bit's shift
//! and tiled row-major across the block. Blocks whose bit is 0 are left
//! untouched, as are the remainder rows and columns outside the block grid.
//!
//! Extraction correlates every block with the same chip pattern and declares
//! a bit black when its correlation is strictly above the mean correlation.
//!
//! The default [`Correlator::Detrended`] first projects the chip pattern off
//! the low-order polynomial surfaces of the block (constant, linear and
//! quadratic terms in x and y). A tiled block rarely holds a whole number of
//! periods, so the raw pattern carries a small DC and ramp component; against
//! an 8-bit cover that component outweighs a gain of a few gray levels. The
//! projection removes the cover's smooth shading from the statistic while
//! keeping almost all of the chip energy. [`Correlator::Raw`] is the plain
//! `mean(pixel * chip)` statistic.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::analysis::{self, ChipSequence};
use crate::error::{Error, Result};
use crate::prng::XorShift64Star;

/// Row-major 8-bit grayscale raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Dimension("image dimensions must be nonzero".into()));
        }
        if pixels.len() != width * height {
            return Err(Error::Dimension(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }
}

/// Monochrome watermark; 1 is black (information bearing), 0 is white.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMatrix {
    cols: usize,
    rows: usize,
    bits: Vec<u8>,
}

impl BitMatrix {
    pub fn new(cols: usize, rows: usize, bits: Vec<u8>) -> Result<Self> {
        if cols == 0 || rows == 0 {
            return Err(Error::Dimension(
                "watermark dimensions must be nonzero".into(),
            ));
        }
        if bits.len() != cols * rows {
            return Err(Error::Dimension(format!(
                "{} bits for a {cols}x{rows} watermark",
                bits.len()
            )));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::Dimension("watermark bits must be 0 or 1".into()));
        }
        Ok(Self { cols, rows, bits })
    }

    pub fn filled(cols: usize, rows: usize, bit: u8) -> Result<Self> {
        Self::new(cols, rows, vec![bit & 1; cols * rows])
    }

    /// A watermark with exactly `black` black bits at positions chosen by `seed`.
    pub fn random(cols: usize, rows: usize, black: usize, seed: u64) -> Result<Self> {
        let n = cols * rows;
        if black > n {
            return Err(Error::Dimension(format!("{black} black bits in {n}")));
        }
        let mut bits = vec![0u8; n];
        bits[..black].fill(1);
        XorShift64Star::new(seed).shuffle(&mut bits);
        Self::new(cols, rows, bits)
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn count_black(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }
}

/// The spreading sequence a plan draws its chips from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpreadCode {
    /// Binary d-sequence of `1/q`.
    DSequence { q: u64 },
    /// Maximal-length LFSR sequence from the built-in polynomial table.
    MSequence { degree: u32 },
}

impl SpreadCode {
    pub fn chips(&self) -> Result<ChipSequence> {
        match *self {
            SpreadCode::DSequence { q } => ChipSequence::from_dsequence(q),
            SpreadCode::MSequence { degree } => analysis::msequence(degree),
        }
    }
}

impl fmt::Display for SpreadCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpreadCode::DSequence { q } => write!(f, "{q}"),
            SpreadCode::MSequence { degree } => write!(f, "msequence:{degree}"),
        }
    }
}

impl FromStr for SpreadCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(d) = s.strip_prefix("msequence:") {
            let degree = d
                .parse()
                .map_err(|_| Error::Plan(format!("bad m-sequence degree {d:?}")))?;
            return Ok(SpreadCode::MSequence { degree });
        }
        s.parse()
            .map(|q| SpreadCode::DSequence { q })
            .map_err(|_| Error::Plan(format!("bad spreading code {s:?}")))
    }
}

/// How per-bit shifts are derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftMode {
    /// Cycle through the shifts with the smallest off-peak autocorrelation.
    Selected,
    /// Bit `i` gets `i * stride mod period`.
    Circular,
    /// Uniform shifts from the keyed generator.
    Random,
    /// Every bit uses the same shift.
    Fixed(usize),
}

impl fmt::Display for ShiftMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShiftMode::Selected => write!(f, "selected"),
            ShiftMode::Circular => write!(f, "circular"),
            ShiftMode::Random => write!(f, "random"),
            ShiftMode::Fixed(s) => write!(f, "fixed:{s}"),
        }
    }
}

impl FromStr for ShiftMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "selected" => Ok(ShiftMode::Selected),
            "circular" => Ok(ShiftMode::Circular),
            "random" => Ok(ShiftMode::Random),
            _ => s
                .strip_prefix("fixed:")
                .and_then(|n| n.parse().ok())
                .map(ShiftMode::Fixed)
                .ok_or_else(|| Error::Plan(format!("unknown shift mode {s:?}"))),
        }
    }
}

/// Everything needed to embed and, later, to extract.
///
/// Shifts are a pure function of the code, the mode, the key and the mark
/// dimensions, so the sidecar never stores them.
#[derive(Debug, Clone, PartialEq)]
pub struct WatermarkPlan {
    pub code: SpreadCode,
    pub gain_k: u32,
    pub block_w: usize,
    pub block_h: usize,
    pub mark_cols: usize,
    pub mark_rows: usize,
    pub shift_mode: ShiftMode,
    pub key: u64,
    shifts: Vec<usize>,
    chips: ChipSequence,
}

/// Builds a plan for a `cover_dims` cover and a `mark_dims` watermark.
///
/// Block size is `cover / mark` per axis (integer division).
pub fn make_plan(
    code: SpreadCode,
    gain_k: u32,
    cover_dims: (usize, usize),
    mark_dims: (usize, usize),
    shift_mode: ShiftMode,
    key: u64,
) -> Result<WatermarkPlan> {
    let (cw, ch) = cover_dims;
    let (mc, mr) = mark_dims;
    if mc == 0 || mr == 0 {
        return Err(Error::Dimension(
            "watermark dimensions must be nonzero".into(),
        ));
    }
    if cw < mc || ch < mr {
        return Err(Error::Dimension(format!(
            "cover {cw}x{ch} is smaller than watermark {mc}x{mr}"
        )));
    }
    WatermarkPlan::from_parts(code, gain_k, (cw / mc, ch / mr), mark_dims, shift_mode, key)
}

impl WatermarkPlan {
    /// Builds a plan from explicit block geometry, re-deriving the shifts.
    pub fn from_parts(
        code: SpreadCode,
        gain_k: u32,
        block: (usize, usize),
        mark_dims: (usize, usize),
        shift_mode: ShiftMode,
        key: u64,
    ) -> Result<Self> {
        let (block_w, block_h) = block;
        let (mark_cols, mark_rows) = mark_dims;
        if block_w == 0 || block_h == 0 || mark_cols == 0 || mark_rows == 0 {
            return Err(Error::Dimension("plan dimensions must be nonzero".into()));
        }
        let chips = code.chips()?;
        let period = chips.len();
        if period < 2 {
            return Err(Error::DegenerateSequence(period));
        }
        let shifts = derive_shifts(&chips, shift_mode, key, mark_cols * mark_rows)?;
        Ok(Self {
            code,
            gain_k,
            block_w,
            block_h,
            mark_cols,
            mark_rows,
            shift_mode,
            key,
            shifts,
            chips,
        })
    }

    pub fn shifts(&self) -> &[usize] {
        &self.shifts
    }

    pub fn period(&self) -> usize {
        self.chips.len()
    }

    pub fn chips(&self) -> &ChipSequence {
        &self.chips
    }

    pub fn bit_count(&self) -> usize {
        self.mark_cols * self.mark_rows
    }

    pub fn block_len(&self) -> usize {
        self.block_w * self.block_h
    }

    /// Top-left pixel of the block carrying bit `i`.
    fn block_origin(&self, i: usize) -> (usize, usize) {
        (
            (i % self.mark_cols) * self.block_w,
            (i / self.mark_cols) * self.block_h,
        )
    }

    fn check_image(&self, img: &GrayImage) -> Result<()> {
        if img.width() < self.block_w * self.mark_cols
            || img.height() < self.block_h * self.mark_rows
        {
            return Err(Error::Dimension(format!(
                "image {}x{} cannot hold {}x{} blocks of {}x{}",
                img.width(),
                img.height(),
                self.mark_cols,
                self.mark_rows,
                self.block_w,
                self.block_h
            )));
        }
        Ok(())
    }

    /// Serializes to the `key=value` sidecar format.
    pub fn to_sidecar(&self) -> String {
        let code = match self.code {
            SpreadCode::DSequence { q } => format!("q={q}\nr=2\n"),
            SpreadCode::MSequence { degree } => format!("lfsr={degree}\n"),
        };
        format!(
            "{code}k={}\nmode={}\nkey={:016x}\nmark={}x{}\nblock={}x{}\n",
            self.gain_k,
            self.shift_mode,
            self.key,
            self.mark_cols,
            self.mark_rows,
            self.block_w,
            self.block_h
        )
    }

    /// Parses a sidecar and re-derives the shifts.
    pub fn from_sidecar(text: &str) -> Result<Self> {
        let mut fields = std::collections::BTreeMap::new();
        for line in text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
        {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Plan(format!("expected key=value, got {line:?}")))?;
            if fields.insert(k.trim(), v.trim()).is_some() {
                return Err(Error::Plan(format!("duplicate field {k:?}")));
            }
        }
        let get = |k: &str| {
            fields
                .get(k)
                .copied()
                .ok_or_else(|| Error::Plan(format!("missing field {k:?}")))
        };
        let num = |k: &str| -> Result<u64> {
            get(k)?
                .parse()
                .map_err(|_| Error::Plan(format!("field {k:?} is not an integer")))
        };
        let code = match (fields.contains_key("q"), fields.contains_key("lfsr")) {
            (true, false) => {
                if num("r")? != 2 {
                    return Err(Error::Plan("only r=2 is supported".into()));
                }
                SpreadCode::DSequence { q: num("q")? }
            }
            (false, true) => SpreadCode::MSequence {
                degree: num("lfsr")? as u32,
            },
            _ => return Err(Error::Plan("exactly one of q or lfsr is required".into())),
        };
        let gain_k = u32::try_from(num("k")?).map_err(|_| Error::Plan("k out of range".into()))?;
        let mode: ShiftMode = get("mode")?.parse()?;
        let key_text = get("key")?;
        let key = u64::from_str_radix(key_text.trim_start_matches("0x"), 16)
            .map_err(|_| Error::Plan(format!("bad key {key_text:?}")))?;
        let mark = parse_dims(get("mark")?)?;
        let block = parse_dims(get("block")?)?;
        Self::from_parts(code, gain_k, block, mark, mode, key)
    }
}

/// Parses `<w>x<h>`.
pub fn parse_dims(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::Plan(format!("bad dimensions {s:?}, expected <w>x<h>"));
    let (w, h) = s.split_once('x').ok_or_else(bad)?;
    Ok((w.parse().map_err(|_| bad())?, h.parse().map_err(|_| bad())?))
}

fn derive_shifts(
    chips: &ChipSequence,
    mode: ShiftMode,
    key: u64,
    bits: usize,
) -> Result<Vec<usize>> {
    let p = chips.len();
    Ok(match mode {
        ShiftMode::Selected => {
            let report = analysis::CorrelationReport::from_chips(chips)?;
            let pool = analysis::select_shifts(&report, (p - 1).min(bits))?;
            (0..bits).map(|i| pool[i % pool.len()]).collect()
        }
        ShiftMode::Circular => {
            let stride = (p / bits).max(1);
            (0..bits).map(|i| i * stride % p).collect()
        }
        ShiftMode::Random => {
            let mut rng = XorShift64Star::new(key);
            (0..bits).map(|_| rng.below(p as u64) as usize).collect()
        }
        ShiftMode::Fixed(s) => {
            if s >= p {
                return Err(Error::ShiftOutOfRange { shift: s, len: p });
            }
            vec![s; bits]
        }
    })
}

/// The `block_w x block_h` chip pattern for bit `bit_index`, row-major.
pub fn spread_pattern(plan: &WatermarkPlan, bit_index: usize) -> Result<Vec<i8>> {
    let count = plan.bit_count();
    if bit_index >= count {
        return Err(Error::BitIndexOutOfRange {
            index: bit_index,
            count,
        });
    }
    let shift = plan.shifts[bit_index];
    Ok((0..plan.block_len())
        .map(|j| plan.chips.at(shift + j))
        .collect())
}

/// `cover + k * chip` on every black bit's block, clamped to `[0, 255]`.
pub fn embed(cover: &GrayImage, mark: &BitMatrix, plan: &WatermarkPlan) -> Result<GrayImage> {
    if (mark.cols(), mark.rows()) != (plan.mark_cols, plan.mark_rows) {
        return Err(Error::Dimension(format!(
            "watermark is {}x{} but the plan expects {}x{}",
            mark.cols(),
            mark.rows(),
            plan.mark_cols,
            plan.mark_rows
        )));
    }
    plan.check_image(cover)?;
    let mut out = cover.clone();
    let k = plan.gain_k as i64;
    for (i, _) in mark.bits().iter().enumerate().filter(|(_, &b)| b == 1) {
        let pattern = spread_pattern(plan, i)?;
        let (x0, y0) = plan.block_origin(i);
        for by in 0..plan.block_h {
            let row = (y0 + by) * out.width + x0;
            for bx in 0..plan.block_w {
                let px = &mut out.pixels[row + bx];
                let v = *px as i64 + k * pattern[by * plan.block_w + bx] as i64;
                *px = v.clamp(0, 255) as u8;
            }
        }
    }
    Ok(out)
}

/// Correlation statistic used by [`extract_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Correlator {
    /// `mean(pixel * chip)` over the block.
    Raw,
    /// `mean(pixel * chip')` where `chip'` is the chip pattern with its
    /// polynomial-surface component removed.
    #[default]
    Detrended,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionResult {
    pub recovered: BitMatrix,
    pub correlations: Vec<f64>,
    /// Mean of `correlations`, accumulated in bit order.
    pub threshold: f64,
}

pub fn extract(image: &GrayImage, plan: &WatermarkPlan) -> Result<ExtractionResult> {
    extract_with(image, plan, Correlator::default())
}

pub fn extract_with(
    image: &GrayImage,
    plan: &WatermarkPlan,
    correlator: Correlator,
) -> Result<ExtractionResult> {
    plan.check_image(image)?;
    let basis = match correlator {
        Correlator::Raw => None,
        Correlator::Detrended => Some(SurfaceBasis::new(plan.block_w, plan.block_h)),
    };
    let n = plan.block_len() as f64;
    let correlations = (0..plan.bit_count())
        .into_par_iter()
        .map(|i| {
            let pattern = spread_pattern(plan, i)?;
            let weights: Vec<f64> = match &basis {
                Some(b) => b.residual(&pattern),
                None => pattern.iter().map(|&c| c as f64).collect(),
            };
            let (x0, y0) = plan.block_origin(i);
            let mut acc = 0.0;
            for by in 0..plan.block_h {
                let row = &image.pixels[(y0 + by) * image.width + x0..][..plan.block_w];
                let w = &weights[by * plan.block_w..][..plan.block_w];
                for (&p, &c) in row.iter().zip(w) {
                    acc += p as f64 * c;
                }
            }
            Ok(acc / n)
        })
        .collect::<Result<Vec<f64>>>()?;
    let threshold = correlations.iter().sum::<f64>() / correlations.len() as f64;
    let bits = correlations
        .iter()
        .map(|&c| u8::from(c > threshold))
        .collect();
    Ok(ExtractionResult {
        recovered: BitMatrix::new(plan.mark_cols, plan.mark_rows, bits)?,
        correlations,
        threshold,
    })
}

/// Orthonormal basis of low-degree polynomial surfaces over a block.
///
/// Quadratic when both sides are at least 4 pixels, otherwise just the
/// constant; a 1-pixel block gets no basis at all.
struct SurfaceBasis {
    vectors: Vec<Vec<f64>>,
}

impl SurfaceBasis {
    fn new(w: usize, h: usize) -> Self {
        let n = w * h;
        if n < 2 {
            return Self {
                vectors: Vec::new(),
            };
        }
        let cx = (w as f64 - 1.0) / 2.0;
        let cy = (h as f64 - 1.0) / 2.0;
        let coord = |j: usize| ((j % w) as f64 - cx, (j / w) as f64 - cy);
        let terms: &[fn(f64, f64) -> f64] = if w >= 4 && h >= 4 {
            &[
                |_, _| 1.0,
                |x, _| x,
                |_, y| y,
                |x, _| x * x,
                |x, y| x * y,
                |_, y| y * y,
            ]
        } else {
            &[|_, _| 1.0]
        };
        let mut vectors: Vec<Vec<f64>> = Vec::new();
        for term in terms {
            let mut v: Vec<f64> = (0..n)
                .map(|j| {
                    let (x, y) = coord(j);
                    term(x, y)
                })
                .collect();
            for b in &vectors {
                let d = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(vi, bi)| *vi -= d * bi);
            }
            let norm = dot(&v, &v).sqrt();
            if norm > 1e-9 * (n as f64).sqrt() {
                v.iter_mut().for_each(|vi| *vi /= norm);
                vectors.push(v);
            }
        }
        Self { vectors }
    }

    fn residual(&self, pattern: &[i8]) -> Vec<f64> {
        let mut r: Vec<f64> = pattern.iter().map(|&c| c as f64).collect();
        for b in &self.vectors {
            let d = dot(&r, b);
            r.iter_mut().zip(b).for_each(|(ri, bi)| *ri -= d * bi);
        }
        r
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Hamming distance between two watermarks of the same shape.
pub fn noise_pixels(recovered: &BitMatrix, original: &BitMatrix) -> Result<usize> {
    if (recovered.cols, recovered.rows) != (original.cols, original.rows) {
        return Err(Error::Dimension(format!(
            "{}x{} vs {}x{}",
            recovered.cols, recovered.rows, original.cols, original.rows
        )));
    }
    Ok(recovered
        .bits
        .iter()
        .zip(&original.bits)
        .filter(|(a, b)| a != b)
        .count())
}

/// Peak signal-to-noise ratio in dB; infinite for identical images.
pub fn psnr(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    if (a.width, a.height) != (b.width, b.height) {
        return Err(Error::Dimension("PSNR needs images of equal size".into()));
    }
    let sse: u64 = a
        .pixels
        .iter()
        .zip(&b.pixels)
        .map(|(&x, &y)| (x as i64 - y as i64).pow(2) as u64)
        .sum();
    if sse == 0 {
        return Ok(f64::INFINITY);
    }
    let mse = sse as f64 / a.pixels.len() as f64;
    Ok(10.0 * (255.0f64 * 255.0 / mse).log10())
}

#[cfg(test)]
mod tests {
    use super::*;

    const Q7: SpreadCode = SpreadCode::DSequence { q: 7 };
    const Q283: SpreadCode = SpreadCode::DSequence { q: 283 };

    fn plan_q7(block: (usize, usize), mode: ShiftMode) -> WatermarkPlan {
        WatermarkPlan::from_parts(Q7, 1, block, (1, 1), mode, 0).unwrap()
    }

    #[test]
    fn make_plan_geometry() {
        let p = make_plan(Q283, 2, (256, 256), (8, 8), ShiftMode::Selected, 0).unwrap();
        assert_eq!((p.block_w, p.block_h), (32, 32));
        assert_eq!(p.shifts().len(), 64);
        assert_eq!(p.period(), 94);
        assert!(p.shifts().iter().all(|&s| (1..94).contains(&s)));

        let p = make_plan(Q283, 2, (100, 70), (8, 8), ShiftMode::Circular, 0).unwrap();
        assert_eq!((p.block_w, p.block_h), (12, 8));
    }

    #[test]
    fn make_plan_errors() {
        assert!(matches!(
            make_plan(Q283, 2, (4, 4), (8, 8), ShiftMode::Selected, 0),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            make_plan(Q283, 2, (4, 4), (0, 8), ShiftMode::Selected, 0),
            Err(Error::Dimension(_))
        ));
        assert_eq!(
            make_plan(
                SpreadCode::DSequence { q: 21 },
                2,
                (8, 8),
                (2, 2),
                ShiftMode::Selected,
                0
            ),
            Err(Error::NotPrime(21))
        );
        assert_eq!(
            make_plan(Q7, 2, (8, 8), (2, 2), ShiftMode::Fixed(3), 0),
            Err(Error::ShiftOutOfRange { shift: 3, len: 3 })
        );
    }

    #[test]
    fn single_bit_circular_plan() {
        let p = make_plan(Q283, 2, (64, 64), (1, 1), ShiftMode::Circular, 0).unwrap();
        assert_eq!(p.shifts(), [0]);
    }

    #[test]
    fn circular_stride() {
        let p = make_plan(Q283, 2, (256, 256), (8, 8), ShiftMode::Circular, 0).unwrap();
        // stride = 94 / 64 = 1
        assert_eq!(&p.shifts()[..4], [0, 1, 2, 3]);
        let p = make_plan(Q283, 2, (256, 256), (4, 4), ShiftMode::Circular, 0).unwrap();
        // stride = 94 / 16 = 5
        assert_eq!(&p.shifts()[..4], [0, 5, 10, 15]);
        assert_eq!(p.shifts()[15], 75);
    }

    #[test]
    fn selected_cycles_best_shifts() {
        let p = make_plan(
            SpreadCode::DSequence { q: 11 },
            2,
            (80, 80),
            (8, 8),
            ShiftMode::Selected,
            0,
        )
        .unwrap();
        let report = analysis::correlation_report(11, 2).unwrap();
        let pool = analysis::select_shifts(&report, 9).unwrap();
        for (i, &s) in p.shifts().iter().enumerate() {
            assert_eq!(s, pool[i % 9]);
        }
    }

    #[test]
    fn random_plan_is_deterministic() {
        let a = make_plan(Q283, 2, (256, 256), (8, 8), ShiftMode::Random, 99).unwrap();
        let b = make_plan(Q283, 2, (256, 256), (8, 8), ShiftMode::Random, 99).unwrap();
        let c = make_plan(Q283, 2, (256, 256), (8, 8), ShiftMode::Random, 100).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.shifts(), c.shifts());
        assert!(a.shifts().iter().all(|&s| s < 94));
    }

    #[test]
    fn degenerate_sequence_rejected() {
        // 1/3 in binary has period 2, the shortest usable; period 1 cannot occur for odd primes.
        assert!(make_plan(
            SpreadCode::DSequence { q: 3 },
            1,
            (4, 4),
            (2, 2),
            ShiftMode::Selected,
            0
        )
        .is_ok());
    }

    #[test]
    fn spread_pattern_examples() {
        let p = plan_q7((2, 2), ShiftMode::Fixed(0));
        assert_eq!(spread_pattern(&p, 0).unwrap(), [-1, -1, 1, -1]);
        let p = plan_q7((2, 2), ShiftMode::Fixed(1));
        assert_eq!(spread_pattern(&p, 0).unwrap(), [-1, 1, -1, -1]);
        let p = plan_q7((3, 1), ShiftMode::Fixed(0));
        assert_eq!(spread_pattern(&p, 0).unwrap(), [-1, -1, 1]);
        assert_eq!(
            spread_pattern(&p, 1),
            Err(Error::BitIndexOutOfRange { index: 1, count: 1 })
        );
    }

    #[test]
    fn embed_pixel_arithmetic() {
        let mark = BitMatrix::filled(1, 1, 1).unwrap();
        let mut p = plan_q7((3, 1), ShiftMode::Fixed(0));
        p.gain_k = 5;
        let cover = GrayImage::new(3, 1, vec![100, 100, 254]).unwrap();
        let out = embed(&cover, &mark, &p).unwrap();
        // chips -1, -1, +1
        assert_eq!(out.pixels(), [95, 95, 255]);
        let cover = GrayImage::new(3, 1, vec![2, 100, 100]).unwrap();
        assert_eq!(embed(&cover, &mark, &p).unwrap().pixels(), [0, 95, 105]);
    }

    #[test]
    fn zero_gain_is_identity() {
        let cover = GrayImage::new(16, 16, (0..=255).collect()).unwrap();
        let mark = BitMatrix::filled(4, 4, 1).unwrap();
        let p = make_plan(Q283, 0, (16, 16), (4, 4), ShiftMode::Selected, 0).unwrap();
        assert_eq!(embed(&cover, &mark, &p).unwrap(), cover);
        assert_eq!(psnr(&cover, &cover).unwrap(), f64::INFINITY);
    }

    #[test]
    fn white_blocks_and_margins_untouched() {
        let cover = GrayImage::filled(70, 67, 128).unwrap();
        let mark = BitMatrix::random(8, 8, 30, 5).unwrap();
        let p = make_plan(Q283, 4, (70, 67), (8, 8), ShiftMode::Selected, 0).unwrap();
        let out = embed(&cover, &mark, &p).unwrap();
        for y in 0..67 {
            for x in 0..70 {
                let (bx, by) = (x / p.block_w, y / p.block_h);
                let inside = bx < 8 && by < 8;
                if !inside || mark.bits()[by * 8 + bx] == 0 {
                    assert_eq!(out.get(x, y), 128, "({x},{y})");
                }
            }
        }
    }

    #[test]
    fn embed_dimension_errors() {
        let p = make_plan(Q283, 2, (64, 64), (8, 8), ShiftMode::Selected, 0).unwrap();
        let cover = GrayImage::filled(32, 32, 0).unwrap();
        let mark = BitMatrix::filled(8, 8, 1).unwrap();
        assert!(matches!(embed(&cover, &mark, &p), Err(Error::Dimension(_))));
        let cover = GrayImage::filled(64, 64, 0).unwrap();
        let mark = BitMatrix::filled(4, 4, 1).unwrap();
        assert!(matches!(embed(&cover, &mark, &p), Err(Error::Dimension(_))));
        assert!(matches!(
            extract(&GrayImage::filled(8, 8, 0).unwrap(), &p),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn flat_cover_round_trip() {
        let cover = GrayImage::filled(256, 256, 128).unwrap();
        let mark = BitMatrix::random(8, 8, 25, 1).unwrap();
        let p = make_plan(Q283, 2, (256, 256), (8, 8), ShiftMode::Selected, 0).unwrap();
        let res = extract(&embed(&cover, &mark, &p).unwrap(), &p).unwrap();
        assert_eq!(noise_pixels(&res.recovered, &mark).unwrap(), 0);
    }

    #[test]
    fn raw_correlator_leaks_cover_dc() {
        // With 1024-pixel blocks and period 94 the raw pattern is not
        // zero-mean, so a flat 128 cover biases every bit differently.
        let cover = GrayImage::filled(256, 256, 128).unwrap();
        let p = make_plan(Q283, 2, (256, 256), (8, 8), ShiftMode::Selected, 0).unwrap();
        let mut worst = 0;
        for seed in 0..10 {
            let mark = BitMatrix::random(8, 8, 32, seed).unwrap();
            let marked = embed(&cover, &mark, &p).unwrap();
            let raw = extract_with(&marked, &p, Correlator::Raw).unwrap();
            worst = worst.max(noise_pixels(&raw.recovered, &mark).unwrap());
            let det = extract(&marked, &p).unwrap();
            assert_eq!(noise_pixels(&det.recovered, &mark).unwrap(), 0);
        }
        assert!(worst > 0);
    }

    #[test]
    fn raw_correlation_matches_definition() {
        let cover = GrayImage::new(4, 2, vec![10, 20, 30, 40, 50, 60, 70, 80]).unwrap();
        let p = WatermarkPlan::from_parts(Q7, 1, (2, 2), (2, 1), ShiftMode::Fixed(1), 0).unwrap();
        let res = extract_with(&cover, &p, Correlator::Raw).unwrap();
        // pattern [-1, +1, -1, -1]
        let b0 = (-10.0 + 20.0 - 50.0 - 60.0) / 4.0;
        let b1 = (-30.0 + 40.0 - 70.0 - 80.0) / 4.0;
        assert_eq!(res.correlations, [b0, b1]);
        assert_eq!(res.threshold, (b0 + b1) / 2.0);
        assert_eq!(res.recovered.bits(), [1, 0]);
    }

    #[test]
    fn threshold_is_strict() {
        let cover = GrayImage::filled(64, 64, 100).unwrap();
        let p = make_plan(Q283, 2, (64, 64), (4, 4), ShiftMode::Fixed(5), 0).unwrap();
        let res = extract_with(&cover, &p, Correlator::Raw).unwrap();
        // identical blocks, identical patterns: every correlation equals the mean
        assert!(res.correlations.iter().all(|&c| c == res.threshold));
        assert_eq!(res.recovered.count_black(), 0);
    }

    #[test]
    fn surface_basis_removes_planes() {
        let b = SurfaceBasis::new(8, 8);
        assert_eq!(b.vectors.len(), 6);
        for (i, u) in b.vectors.iter().enumerate() {
            for (j, v) in b.vectors.iter().enumerate() {
                let d = dot(u, v);
                assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
        assert_eq!(SurfaceBasis::new(2, 2).vectors.len(), 1);
        assert_eq!(SurfaceBasis::new(1, 1).vectors.len(), 0);
        // residual is orthogonal to any quadratic surface
        let pattern: Vec<i8> = (0..64)
            .map(|j| if (j * 7 + j / 3) % 5 < 2 { 1 } else { -1 })
            .collect();
        let r = b.residual(&pattern);
        let surface: Vec<f64> = (0..64)
            .map(|j| {
                let (x, y) = ((j % 8) as f64, (j / 8) as f64);
                3.0 + 0.5 * x - 2.0 * y + 0.25 * x * x - x * y + 0.1 * y * y
            })
            .collect();
        assert!(dot(&r, &surface).abs() < 1e-9);
    }

    #[test]
    fn noise_pixel_examples() {
        let a = BitMatrix::random(8, 8, 20, 3).unwrap();
        assert_eq!(noise_pixels(&a, &a).unwrap(), 0);
        let ones = BitMatrix::filled(8, 8, 1).unwrap();
        let zeros = BitMatrix::filled(8, 8, 0).unwrap();
        assert_eq!(noise_pixels(&ones, &zeros).unwrap(), 64);
        let small = BitMatrix::filled(4, 4, 0).unwrap();
        assert!(noise_pixels(&ones, &small).is_err());
    }

    #[test]
    fn psnr_value() {
        let a = GrayImage::filled(4, 4, 100).unwrap();
        let b = GrayImage::filled(4, 4, 102).unwrap();
        let expected = 10.0 * (255.0f64 * 255.0 / 4.0).log10();
        assert!((psnr(&a, &b).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn sidecar_round_trip() {
        for mode in [
            ShiftMode::Selected,
            ShiftMode::Circular,
            ShiftMode::Random,
            ShiftMode::Fixed(7),
        ] {
            let p = make_plan(Q283, 3, (256, 200), (8, 5), mode, 0xDEAD_BEEF).unwrap();
            let text = p.to_sidecar();
            assert_eq!(WatermarkPlan::from_sidecar(&text).unwrap(), p);
        }
        let p = make_plan(
            SpreadCode::MSequence { degree: 6 },
            2,
            (64, 64),
            (4, 4),
            ShiftMode::Random,
            1,
        )
        .unwrap();
        assert_eq!(WatermarkPlan::from_sidecar(&p.to_sidecar()).unwrap(), p);
    }

    #[test]
    fn sidecar_format() {
        let p = make_plan(Q283, 2, (256, 256), (8, 8), ShiftMode::Random, 1234).unwrap();
        assert_eq!(
            p.to_sidecar(),
            "q=283\nr=2\nk=2\nmode=random\nkey=00000000000004d2\nmark=8x8\nblock=32x32\n"
        );
    }

    #[test]
    fn sidecar_errors() {
        let full = "q=283\nr=2\nk=2\nmode=random\nkey=04d2\nmark=8x8\nblock=32x32\n";
        assert!(WatermarkPlan::from_sidecar(full).is_ok());
        let truncated = &full[..full.len() - 13];
        assert!(matches!(
            WatermarkPlan::from_sidecar(truncated),
            Err(Error::Plan(_))
        ));
        assert!(matches!(
            WatermarkPlan::from_sidecar(&full.replace("r=2", "r=10")),
            Err(Error::Plan(_))
        ));
        assert!(matches!(
            WatermarkPlan::from_sidecar(&full.replace("mode=random", "mode=spiral")),
            Err(Error::Plan(_))
        ));
        assert!(matches!(
            WatermarkPlan::from_sidecar(&full.replace("mark=8x8", "mark=8by8")),
            Err(Error::Plan(_))
        ));
        assert!(matches!(
            WatermarkPlan::from_sidecar("garbage"),
            Err(Error::Plan(_))
        ));
        assert_eq!(
            WatermarkPlan::from_sidecar(&full.replace("q=283", "q=282")),
            Err(Error::NotPrime(282))
        );
    }
}
