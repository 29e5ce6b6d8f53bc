//! Decimal sequences: the expansion of `1/q` in base `r`.
//!
//! Digit `i` (1-based) of `1/q` is `floor(r * (r^(i-1) mod q) / q)`. When
//! `q = t*r - 1` (every odd `q` in base 2) this is the same as the shorter
//! `(r^i mod q) mod r`. For prime `q` coprime to `r` the expansion is purely
//! periodic and its period is the multiplicative order of `r` modulo `q`.
//!
//! Two generators are provided and are checked against each other and against
//! schoolbook long division:
//!
//! - [`generate`] evaluates each digit independently with modular
//!   exponentiation.
//! - [`register_generate`] runs the carry shift register for `q = t*r - 1`,
//!   which emits the same digits in reverse order.
//!
//! All arithmetic is done in `u64` and `q` is limited to `q < 2^31`.

use crate::error::{Error, Result};

/// Largest modulus accepted by the generators (exclusive).
pub const MAX_MODULUS: u64 = 1 << 31;

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// `base^exp mod modulus`. Requires `modulus < 2^32` so products fit in `u64`.
pub fn pow_mod(base: u64, mut exp: u64, modulus: u64) -> u64 {
    debug_assert!(modulus > 0 && modulus <= 1 << 32);
    if modulus == 1 {
        return 0;
    }
    let mut result = 1u64;
    let mut b = base % modulus;
    while exp > 0 {
        if exp & 1 == 1 {
            result = result * b % modulus;
        }
        b = b * b % modulus;
        exp >>= 1;
    }
    result
}

/// Trial-division primality test; fine for the `q < 2^31` range used here.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n.is_multiple_of(2) || n.is_multiple_of(3) {
        return false;
    }
    let mut d = 5u64;
    while d * d <= n {
        if n.is_multiple_of(d) || n.is_multiple_of(d + 2) {
            return false;
        }
        d += 6;
    }
    true
}

/// Distinct prime factors of `n`, ascending.
pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Validates `(q, r)` for the closed-form and register generators.
pub fn check_params(q: u64, r: u64) -> Result<()> {
    if r < 2 {
        return Err(Error::RadixTooSmall(r));
    }
    if q >= MAX_MODULUS {
        return Err(Error::ModulusTooLarge(q));
    }
    if !is_prime(q) {
        return Err(Error::NotPrime(q));
    }
    if gcd(r, q) != 1 {
        return Err(Error::NotCoprime { r, q });
    }
    Ok(())
}

/// Digit `i` (1-based) of `1/q` in base `r`.
///
/// Computed as `floor(r * (r^(i-1) mod q) / q)`; equal to [`closed_form_digit`]
/// whenever `q = -1 (mod r)`.
pub fn digit_at(i: u64, q: u64, r: u64) -> Result<u32> {
    check_params(q, r)?;
    if i == 0 {
        return Err(Error::ZeroIndex);
    }
    Ok(digit_unchecked(i, q, r))
}

fn digit_unchecked(i: u64, q: u64, r: u64) -> u32 {
    (r * pow_mod(r, i - 1, q) / q) as u32
}

/// `(r^i mod q) mod r`.
///
/// This is digit `i` of `1/q` only for `q = t*r - 1`: the digit satisfies
/// `a_i = -(r^i mod q) / q (mod r)`, and `-1/q = 1 (mod r)` exactly when
/// `q = -1 (mod r)`. For base 10 and `q = 11` it yields `0, 1` where the
/// expansion is `0, 9`.
pub fn closed_form_digit(i: u64, q: u64, r: u64) -> Result<u32> {
    check_params(q, r)?;
    if i == 0 {
        return Err(Error::ZeroIndex);
    }
    Ok((pow_mod(r, i, q) % r) as u32)
}

/// Multiplicative order of `r` modulo `q`, i.e. the period of `1/q` in base `r`.
///
/// Starts from `q - 1` and strips prime factors while `r^(order/f) == 1`.
pub fn period(q: u64, r: u64) -> Result<usize> {
    check_params(q, r)?;
    Ok(order_unchecked(q, r))
}

fn order_unchecked(q: u64, r: u64) -> usize {
    let mut order = q - 1;
    for f in prime_factors(q - 1) {
        while order.is_multiple_of(f) && pow_mod(r, order / f, q) == 1 {
            order /= f;
        }
    }
    order as usize
}

/// The fractional digits of `1/q` in base `r` together with their period.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DSequence {
    pub q: u64,
    pub r: u64,
    /// `digits[i]` is the digit with 1-based exponent `i + 1`.
    pub digits: Vec<u32>,
    pub period: usize,
}

impl DSequence {
    /// Exactly one period of digits.
    pub fn one_period(q: u64, r: u64) -> Result<Self> {
        let p = period(q, r)?;
        generate(q, r, p)
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    /// `r^(period/2) == q - 1 (mod q)`: the condition under which the
    /// half-period complement property is guaranteed.
    pub fn half_period_negates(&self) -> bool {
        self.period.is_multiple_of(2) && pow_mod(self.r, (self.period / 2) as u64, self.q) == self.q - 1
    }
}

/// The first `n` digits of `1/q` in base `r`, each evaluated by [`digit_at`].
pub fn generate(q: u64, r: u64, n: usize) -> Result<DSequence> {
    check_params(q, r)?;
    if n == 0 {
        return Err(Error::ZeroLength);
    }
    let digits = (1..=n as u64).map(|i| digit_unchecked(i, q, r)).collect();
    Ok(DSequence {
        q,
        r,
        digits,
        period: order_unchecked(q, r),
    })
}

/// Schoolbook long division of 1 by `q` in base `r`.
///
/// Independent of [`generate`]; accepts any `q >= 2`, prime or not, so it
/// also covers terminating expansions such as `1/2`.
pub fn long_division_digits(q: u64, r: u64, n: usize) -> Result<Vec<u32>> {
    if q < 2 {
        return Err(Error::ModulusTooSmall(q));
    }
    if r < 2 {
        return Err(Error::RadixTooSmall(r));
    }
    if q >= MAX_MODULUS {
        return Err(Error::ModulusTooLarge(q));
    }
    let mut remainder = 1u64;
    let mut digits = Vec::with_capacity(n);
    for _ in 0..n {
        remainder *= r;
        digits.push((remainder / q) as u32);
        remainder %= q;
    }
    Ok(digits)
}

/// Output of the carry shift register for `1/(t*r - 1)`.
///
/// Column `j` holds the register digit and the carry produced with it. The
/// rows are stored in generation order; the d-sequence reads the digit row
/// backwards (see [`RegisterTrace::reversed_digits`]).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterTrace {
    pub t: u64,
    pub r: u64,
    pub q: u64,
    pub carry_row: Vec<u64>,
    pub digit_row: Vec<u32>,
}

impl RegisterTrace {
    pub fn reversed_digits(&self) -> Vec<u32> {
        self.digit_row.iter().rev().copied().collect()
    }

    pub fn reversed_carries(&self) -> Vec<u64> {
        self.carry_row.iter().rev().copied().collect()
    }

    /// Checks `r*u_i + a_i == u_{i+1} + t*a_{i+1}` on the reversed rows.
    ///
    /// The wrap-around pair (last, first) is included when the trace covers a
    /// whole number of periods.
    pub fn satisfies_recurrence(&self) -> bool {
        let a = self.reversed_digits();
        let u = self.reversed_carries();
        let n = a.len();
        if n == 0 {
            return true;
        }
        if u.iter().any(|&c| c >= self.t) {
            return false;
        }
        let holds = |i: usize, j: usize| self.r * u[i] + a[i] as u64 == u[j] + self.t * a[j] as u64;
        if !(0..n - 1).all(|i| holds(i, i + 1)) {
            return false;
        }
        let p = order_unchecked(self.q, self.r);
        if n.is_multiple_of(p) {
            return holds(n - 1, 0);
        }
        true
    }
}

/// Runs the carry shift register for `q = t*r - 1` for `n` steps.
///
/// Seeded with digit 1 and carry 0; each step computes `v = t*a + u`, emits
/// digit `v mod r` and carry `v div r`. The digit row is the d-sequence of
/// `1/q` in reverse order. Nothing is reversed here.
pub fn register_generate(t: u64, r: u64, n: usize) -> Result<RegisterTrace> {
    if r < 2 {
        return Err(Error::RadixTooSmall(r));
    }
    let q = (t * r).saturating_sub(1);
    if t == 0 || !is_prime(q) {
        return Err(Error::RegisterModulus { t, r, q });
    }
    check_params(q, r)?;
    if n == 0 {
        return Err(Error::ZeroLength);
    }
    let mut carry_row = Vec::with_capacity(n);
    let mut digit_row = Vec::with_capacity(n);
    let (mut a, mut u) = (1u64, 0u64);
    for _ in 0..n {
        digit_row.push(a as u32);
        carry_row.push(u);
        let v = t * a + u;
        a = v % r;
        u = v / r;
    }
    Ok(RegisterTrace {
        t,
        r,
        q,
        carry_row,
        digit_row,
    })
}

/// `t` such that `q = t*r - 1`, if one exists.
pub fn register_multiplier(q: u64, r: u64) -> Option<u64> {
    (q + 1).is_multiple_of(r).then(|| (q + 1) / r)
}

/// Whether digits half a period apart sum to `r - 1`.
///
/// Returns `Err(NotApplicable)` for an odd period, which is distinct from
/// `Ok(false)`.
pub fn check_complementarity(seq: &DSequence) -> Result<bool> {
    let p = seq.period;
    if p % 2 == 1 {
        return Err(Error::NotApplicable(format!(
            "period {p} of 1/{} in base {} is odd",
            seq.q, seq.r
        )));
    }
    let regenerated;
    let digits = if seq.digits.len() >= p {
        &seq.digits
    } else {
        regenerated = generate(seq.q, seq.r, p)?;
        &regenerated.digits
    };
    let half = p / 2;
    let target = (seq.r - 1) as u32;
    Ok((0..half).all(|i| digits[i] + digits[i + half] == target))
}

/// Compares a claimed period against the true multiplicative order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PeriodCheck {
    Matches(usize),
    Differs {
        actual: usize,
        claimed: usize,
        /// Whether the claimed value divides `q - 1` at all; if not it can
        /// never be an order modulo `q`.
        claimed_possible: bool,
    },
}

pub fn check_claimed_period(q: u64, r: u64, claimed: usize) -> Result<PeriodCheck> {
    let actual = period(q, r)?;
    if actual == claimed {
        return Ok(PeriodCheck::Matches(actual));
    }
    Ok(PeriodCheck::Differs {
        actual,
        claimed,
        claimed_possible: claimed > 0 && (q - 1).is_multiple_of(claimed as u64),
    })
}
