//! Bipolar chip sequences and their correlation structure.
//!
//! Binary digits are mapped `0 -> -1`, `1 -> +1` so that every chip squares to
//! one. Correlations are cyclic and normalized by the sequence length.

use std::fmt;

use crate::dseq::{self, DSequence};
use crate::error::{Error, Result};

/// Where a chip sequence came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChipSource {
    /// Bipolarized digits with no further provenance.
    Digits,
    DSequence {
        q: u64,
        r: u64,
    },
    MSequence {
        taps: u32,
        degree: u32,
    },
}

impl fmt::Display for ChipSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChipSource::Digits => write!(f, "digits"),
            ChipSource::DSequence { q, r } => write!(f, "1/{q} base {r}"),
            ChipSource::MSequence { taps, degree } => {
                write!(f, "m-sequence degree {degree} poly {taps:#x}")
            }
        }
    }
}

/// A sequence of `-1`/`+1` chips with the cyclic rotation already applied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChipSequence {
    chips: Vec<i8>,
    pub source: ChipSource,
    pub shift: usize,
}

impl ChipSequence {
    /// Builds a sequence from raw chips; every value must be `-1` or `+1`.
    pub fn from_chips(chips: Vec<i8>, source: ChipSource) -> Result<Self> {
        if let Some(&bad) = chips.iter().find(|&&c| c != 1 && c != -1) {
            return Err(Error::InvalidDigit {
                digit: bad as u32,
                r: 2,
            });
        }
        Ok(Self {
            chips,
            source,
            shift: 0,
        })
    }

    /// One period of the binary d-sequence of `1/q`, bipolarized.
    pub fn from_dsequence(q: u64) -> Result<Self> {
        let seq = DSequence::one_period(q, 2)?;
        let mut chips = bipolarize(&seq.digits, 2)?;
        chips.source = ChipSource::DSequence { q, r: 2 };
        Ok(chips)
    }

    pub fn chips(&self) -> &[i8] {
        &self.chips
    }

    pub fn len(&self) -> usize {
        self.chips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chips.is_empty()
    }

    /// Chip `i` of the rotated sequence, indices wrapping.
    pub fn at(&self, i: usize) -> i8 {
        self.chips[i % self.chips.len()]
    }

    /// Cyclic left rotation by `shift`: `out[i] = self[(i + shift) mod len]`.
    pub fn rotated(&self, shift: usize) -> Self {
        let n = self.chips.len();
        if n == 0 {
            return self.clone();
        }
        let s = shift % n;
        let mut chips = Vec::with_capacity(n);
        chips.extend_from_slice(&self.chips[s..]);
        chips.extend_from_slice(&self.chips[..s]);
        Self {
            chips,
            source: self.source,
            shift: (self.shift + s) % n,
        }
    }

    pub fn negated(&self) -> Self {
        Self {
            chips: self.chips.iter().map(|&c| -c).collect(),
            source: self.source,
            shift: self.shift,
        }
    }
}

/// Maps binary digits to chips, `0 -> -1` and `1 -> +1`.
pub fn bipolarize(digits: &[u32], r: u64) -> Result<ChipSequence> {
    if r != 2 {
        return Err(Error::UnsupportedRadix(r));
    }
    let chips = digits
        .iter()
        .map(|&d| match d {
            0 => Ok(-1),
            1 => Ok(1),
            _ => Err(Error::InvalidDigit { digit: d, r }),
        })
        .collect::<Result<Vec<i8>>>()?;
    Ok(ChipSequence {
        chips,
        source: ChipSource::Digits,
        shift: 0,
    })
}

/// Cyclic correlation `(1/p) * sum a[i] * b[(i + s) mod p]`.
pub fn cross_correlation(a: &ChipSequence, b: &ChipSequence, s: usize) -> Result<f64> {
    let p = a.len();
    if p != b.len() {
        return Err(Error::LengthMismatch(p, b.len()));
    }
    if s >= p {
        return Err(Error::ShiftOutOfRange { shift: s, len: p });
    }
    Ok(raw_correlation(&a.chips, &b.chips, s) as f64 / p as f64)
}

pub fn autocorrelation(x: &ChipSequence, s: usize) -> Result<f64> {
    cross_correlation(x, x, s)
}

fn raw_correlation(a: &[i8], b: &[i8], s: usize) -> i64 {
    let p = a.len();
    let (head, tail) = b.split_at(s);
    let wrapped = tail.iter().chain(head);
    a.iter()
        .zip(wrapped)
        .take(p)
        .map(|(&x, &y)| (x * y) as i64)
        .sum()
}

/// Autocorrelation at every cyclic shift of one period.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    pub source: ChipSource,
    /// `values[s]` is the autocorrelation at shift `s`.
    pub values: Vec<f64>,
    /// Mean over shifts `s >= 1`.
    pub mean: f64,
    /// Population standard deviation over shifts `s >= 1`.
    pub std: f64,
}

impl CorrelationReport {
    pub fn from_chips(chips: &ChipSequence) -> Result<Self> {
        let p = chips.len();
        if p < 2 {
            return Err(Error::DegenerateSequence(p));
        }
        let values: Vec<f64> = (0..p)
            .map(|s| raw_correlation(&chips.chips, &chips.chips, s) as f64 / p as f64)
            .collect();
        let off_peak = &values[1..];
        let n = off_peak.len() as f64;
        let mean = off_peak.iter().sum::<f64>() / n;
        let var = off_peak.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Ok(Self {
            source: chips.source,
            values,
            mean,
            std: var.sqrt(),
        })
    }

    pub fn period(&self) -> usize {
        self.values.len()
    }

    /// Largest `|value|` over shifts `s >= 1`; ties go to the smaller shift.
    pub fn worst_shift(&self) -> usize {
        let mut best = 1;
        for s in 2..self.values.len() {
            if self.values[s].abs() > self.values[best].abs() {
                best = s;
            }
        }
        best
    }

    pub fn max_off_peak(&self) -> f64 {
        self.values[self.worst_shift()].abs()
    }

    /// `shift,value` CSV with values at 12 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("shift,value\n");
        for (s, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{s},{}\n", sig12(*v)));
        }
        out
    }
}

/// Formats with 12 significant digits, keeping a decimal point (`1.0`, `-0.333333333333`).
pub fn sig12(v: f64) -> String {
    let rounded: f64 = format!("{v:.11e}").parse().unwrap_or(v);
    let rounded = if rounded == 0.0 { 0.0 } else { rounded };
    format!("{rounded:?}")
}

/// Autocorrelation report for the binary d-sequence of `1/q`.
pub fn correlation_report(q: u64, r: u64) -> Result<CorrelationReport> {
    if r != 2 {
        dseq::check_params(q, r)?;
        return Err(Error::UnsupportedRadix(r));
    }
    CorrelationReport::from_chips(&ChipSequence::from_dsequence(q)?)
}

/// The `count` nonzero shifts with the smallest `|autocorrelation|`, ordered
/// by magnitude and then by shift.
pub fn select_shifts(report: &CorrelationReport, count: usize) -> Result<Vec<usize>> {
    let max = report.period().saturating_sub(1);
    if count == 0 || count > max {
        return Err(Error::CountOutOfRange { count, max });
    }
    let mut shifts: Vec<usize> = (1..report.period()).collect();
    shifts.sort_by(|&a, &b| {
        report.values[a]
            .abs()
            .total_cmp(&report.values[b].abs())
            .then(a.cmp(&b))
    });
    shifts.truncate(count);
    Ok(shifts)
}

/// Known primitive polynomials, bit `i` holding the coefficient of `x^i`
/// (including the leading term).
pub fn primitive_taps(degree: u32) -> Option<u32> {
    Some(match degree {
        3 => 0b1011,   // x^3 + x + 1
        4 => 0x13,     // x^4 + x + 1
        5 => 0x25,     // x^5 + x^2 + 1
        6 => 0x43,     // x^6 + x + 1
        7 => 0x83,     // x^7 + x + 1
        8 => 0x11D,    // x^8 + x^4 + x^3 + x^2 + 1
        9 => 0x211,    // x^9 + x^4 + 1
        10 => 0x409,   // x^10 + x^3 + 1
        11 => 0x805,   // x^11 + x^2 + 1
        12 => 0x1053,  // x^12 + x^6 + x^4 + x + 1
        13 => 0x201B,  // x^13 + x^4 + x^3 + x + 1
        14 => 0x4443,  // x^14 + x^10 + x^6 + x + 1
        15 => 0x8003,  // x^15 + x + 1
        16 => 0x1100B, // x^16 + x^12 + x^3 + x + 1
        _ => return None,
    })
}

/// Fibonacci LFSR output over `2^degree - 1` steps.
///
/// `taps` is the feedback polynomial with bit `degree` set; the register obeys
/// `a[k+n] = xor of a[k+i]` for every low coefficient `i`. Bit `i` of `seed`
/// is `a[i]`, so the first output is bit 0 of the seed.
pub fn lfsr_msequence(taps: u32, degree: u32, seed: u32) -> Result<ChipSequence> {
    if !(2..=24).contains(&degree) || taps >> degree != 1 || taps & 1 == 0 {
        return Err(Error::InvalidTaps { taps, degree });
    }
    let mask = (1u32 << degree) - 1;
    if seed & mask == 0 || seed > mask {
        return Err(Error::ZeroSeed(degree));
    }
    let feedback = taps & mask;
    let len = mask as usize;
    let mut state = seed;
    let mut chips = Vec::with_capacity(len);
    for _ in 0..len {
        chips.push(if state & 1 == 1 { 1 } else { -1 });
        let bit = (state & feedback).count_ones() & 1;
        state = (state >> 1) | (bit << (degree - 1));
    }
    Ok(ChipSequence {
        chips,
        source: ChipSource::MSequence { taps, degree },
        shift: 0,
    })
}

/// m-sequence from the built-in primitive polynomial table, seeded with all ones.
pub fn msequence(degree: u32) -> Result<ChipSequence> {
    let taps = primitive_taps(degree).ok_or(Error::InvalidTaps { taps: 0, degree })?;
    lfsr_msequence(taps, degree, (1 << degree) - 1)
}
