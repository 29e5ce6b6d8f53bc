//! Library results checked against naive re-derivations.

use dseqmark::analysis::{self, CorrelationReport};
use dseqmark::dseq;
use dseqmark::prng::XorShift64Star;

fn naive_prime(n: u64) -> bool {
    n >= 2 && (2..n).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
}

/// Schoolbook division of 1 by q.
fn oracle_digits(q: u64, r: u64, n: usize) -> Vec<u32> {
    let mut rem = 1u64;
    (0..n)
        .map(|_| {
            rem *= r;
            let d = rem / q;
            rem %= q;
            d as u32
        })
        .collect()
}

/// Smallest p with r^p = 1 (mod q), by repeated multiplication.
fn oracle_period(q: u64, r: u64) -> usize {
    let mut x = r % q;
    let mut p = 1;
    while x != 1 {
        x = x * r % q;
        p += 1;
    }
    p
}

/// Agreements minus disagreements over one period, divided by the period.
fn oracle_autocorr(bits: &[u32], s: usize) -> f64 {
    let p = bits.len();
    let agree = (0..p).filter(|&i| bits[i] == bits[(i + s) % p]).count() as f64;
    (2.0 * agree - p as f64) / p as f64
}

#[test]
fn digits_match_schoolbook_division() {
    for q in (3..1500).filter(|&q| naive_prime(q)) {
        for r in [2u64, 3, 10, 16] {
            if dseq::gcd(q, r) != 1 {
                continue;
            }
            let p = oracle_period(q, r);
            assert_eq!(dseq::period(q, r).unwrap(), p, "q={q} r={r}");
            let seq = dseq::generate(q, r, 2 * p + 3).unwrap();
            assert_eq!(seq.digits, oracle_digits(q, r, 2 * p + 3), "q={q} r={r}");
        }
    }
}

#[test]
fn large_prime_period_divides_q_minus_one() {
    let mut rng = XorShift64Star::new(77);
    let mut checked = 0;
    while checked < 30 {
        let q = rng.range_inclusive(1 << 20, 1 << 24) as u64;
        if !naive_prime(q) {
            continue;
        }
        let p = dseq::period(q, 2).unwrap() as u64;
        assert_eq!((q - 1) % p, 0);
        assert_eq!(dseq::pow_mod(2, p, q), 1);
        for f in dseq::prime_factors(p) {
            assert_ne!(dseq::pow_mod(2, p / f, q), 1, "q={q} p={p} f={f}");
        }
        checked += 1;
    }
}

#[test]
fn register_rows_by_direct_simulation() {
    for (t, r) in [
        (2u64, 10u64),
        (3, 10),
        (6, 2),
        (7, 2),
        (12, 2),
        (30, 2),
        (2, 7),
    ] {
        let q = t * r - 1;
        let n = 40;
        let trace = dseq::register_generate(t, r, n).unwrap();
        let (mut a, mut u) = (1u64, 0u64);
        for i in 0..n {
            assert_eq!(trace.digit_row[i] as u64, a, "t={t} r={r} i={i}");
            assert_eq!(trace.carry_row[i], u);
            let v = t * a + u;
            a = v % r;
            u = v / r;
        }
        assert!(naive_prime(q));
        let p = oracle_period(q, r);
        let reversed = dseq::register_generate(t, r, p).unwrap().reversed_digits();
        assert_eq!(reversed, oracle_digits(q, r, p), "q={q}");
    }
}

#[test]
fn autocorrelation_matches_agreement_count() {
    for q in [7u64, 11, 13, 37, 41, 61, 101, 167, 277, 283, 619] {
        let p = oracle_period(q, 2);
        let bits = oracle_digits(q, 2, p);
        let report = analysis::correlation_report(q, 2).unwrap();
        assert_eq!(report.period(), p);
        for s in 0..p {
            assert!(
                (report.values[s] - oracle_autocorr(&bits, s)).abs() < 1e-12,
                "q={q} s={s}"
            );
        }
        let off: Vec<f64> = (1..p).map(|s| oracle_autocorr(&bits, s)).collect();
        let mean = off.iter().sum::<f64>() / off.len() as f64;
        let var = off.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / off.len() as f64;
        assert!((report.mean - mean).abs() < 1e-12);
        assert!((report.std - var.sqrt()).abs() < 1e-12);
    }
}

#[test]
fn msequence_matches_polynomial_recurrence() {
    // x^5 + x^2 + 1: a[k+5] = a[k+2] ^ a[k]
    let seq = analysis::msequence(5).unwrap();
    let bits: Vec<u8> = seq.chips().iter().map(|&c| (c > 0) as u8).collect();
    assert_eq!(bits.len(), 31);
    for k in 0..31 {
        assert_eq!(bits[(k + 5) % 31], bits[(k + 2) % 31] ^ bits[k], "k={k}");
    }
    let report = CorrelationReport::from_chips(&seq).unwrap();
    assert!(report.values[1..]
        .iter()
        .all(|&v| (v + 1.0 / 31.0).abs() < 1e-12));
}
