//! Exact rational scalars and small dense vectors over them.
//!
//! Everything in the engine is computed in `BigRational`; there is no
//! floating point anywhere in this crate. On the wire rationals are
//! always written as `"p/q"` strings.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Rat = BigRational;

/// Shorthand for building a rational from machine integers.
pub fn rat(numer: i64, denom: i64) -> Rat {
    Rat::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Parses `"p/q"` (or a bare integer `"p"`) into a canonical rational.
pub fn parse_rat(s: &str) -> Result<Rat> {
    let t = s.trim();
    t.parse::<Rat>()
        .map_err(|_| Error::Parse(format!("invalid rational {s:?}")))
}

/// Formats a rational as `"p/q"`, denominator always present and positive.
pub fn fmt_rat(r: &Rat) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Decimal expansion with `digits` places, computed by integer division
/// (round half away from zero). Used only for human-readable output.
pub fn decimal_string(r: &Rat, digits: u32) -> String {
    let sign = if r.is_negative() { "-" } else { "" };
    let abs = r.abs();
    let scale = BigInt::from(10u8).pow(digits);
    let scaled = (abs.numer() * &scale * 2 + abs.denom()) / (abs.denom() * 2);
    let (int_part, frac_part) = scaled.div_rem(&scale);
    if digits == 0 {
        return format!("{sign}{int_part}");
    }
    format!("{sign}{int_part}.{frac_part:0>width$}", width = digits as usize)
}

pub fn parse_vec(parts: &[String]) -> Result<Vec<Rat>> {
    parts.iter().map(|s| parse_rat(s)).collect()
}

pub fn fmt_vec(v: &[Rat]) -> Vec<String> {
    v.iter().map(fmt_rat).collect()
}

pub fn zeros(d: usize) -> Vec<Rat> {
    vec![Rat::zero(); d]
}

/// Standard basis vector `e^j` (zero-indexed).
pub fn unit(d: usize, j: usize) -> Vec<Rat> {
    let mut v = zeros(d);
    v[j] = Rat::one();
    v
}

pub fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn add(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn neg(a: &[Rat]) -> Vec<Rat> {
    a.iter().map(|x| -x).collect()
}

pub fn scale(c: &Rat, a: &[Rat]) -> Vec<Rat> {
    a.iter().map(|x| c * x).collect()
}

pub fn is_zero_vec(a: &[Rat]) -> bool {
    a.iter().all(Zero::is_zero)
}

/// `a + c*b` in one pass.
pub fn add_scaled(a: &[Rat], c: &Rat, b: &[Rat]) -> Vec<Rat> {
    a.iter().zip(b).map(|(x, y)| x + c * y).collect()
}

/// Scales a nonzero rational vector by a positive factor so that all
/// entries are integers with overall gcd 1. Zero vectors are returned
/// unchanged. The sign of the vector is preserved.
pub fn primitive(a: &[Rat]) -> Vec<Rat> {
    if is_zero_vec(a) {
        return a.to_vec();
    }
    let mut denom_lcm = BigInt::one();
    for x in a {
        denom_lcm = denom_lcm.lcm(x.denom());
    }
    let ints: Vec<BigInt> = a.iter().map(|x| x.numer() * (&denom_lcm / x.denom())).collect();
    let mut g = BigInt::zero();
    for n in &ints {
        g = g.gcd(n);
    }
    ints.into_iter().map(|n| Rat::from_integer(n / &g)).collect()
}

/// Total order on rational vectors: entrywise, first difference decides.
pub fn lex_cmp(a: &[Rat], b: &[Rat]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        let c = x.cmp(y);
        if c != std::cmp::Ordering::Equal {
            return c;
        }
    }
    a.len().cmp(&b.len())
}
