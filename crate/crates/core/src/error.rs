use thiserror::Error;

use crate::pnm::PnmError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("q must be prime (got {0})")]
    NotPrime(u64),
    #[error("radix {r} shares a factor with q = {q}")]
    NotCoprime { r: u64, q: u64 },
    #[error("radix must be at least 2 (got {0})")]
    RadixTooSmall(u64),
    #[error("q = {0} exceeds the supported limit of 2^31")]
    ModulusTooLarge(u64),
    #[error("modulus must be at least 2 (got {0})")]
    ModulusTooSmall(u64),
    #[error("digit index is 1-based; 0 is not a valid index")]
    ZeroIndex,
    #[error("length must be at least 1")]
    ZeroLength,
    #[error("t = {t}, r = {r} gives t*r - 1 = {q}, which is not prime")]
    RegisterModulus { t: u64, r: u64, q: u64 },
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("unsupported radix {0}: chips are only defined for binary digits")]
    UnsupportedRadix(u64),
    #[error("digit {digit} is not a valid base-{r} digit")]
    InvalidDigit { digit: u32, r: u64 },
    #[error("shift {shift} out of range for length {len}")]
    ShiftOutOfRange { shift: usize, len: usize },
    #[error("sequence lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("count {count} out of range 1..={max}")]
    CountOutOfRange { count: usize, max: usize },
    #[error("LFSR seed must be a nonzero {0}-bit state")]
    ZeroSeed(u32),
    #[error("invalid LFSR polynomial {taps:#x} for degree {degree}")]
    InvalidTaps { taps: u32, degree: u32 },
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("degenerate spreading sequence: period {0} is too short")]
    DegenerateSequence(usize),
    #[error("bit index {index} out of range for {count} bits")]
    BitIndexOutOfRange { index: usize, count: usize },
    #[error("bad plan: {0}")]
    Plan(String),
    #[error("bad cover specification: {0}")]
    CoverSpec(String),
    #[error(transparent)]
    Image(#[from] PnmError),
}
