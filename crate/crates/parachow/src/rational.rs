//! Exact rational scalars.
//!
//! Everything in this crate is computed over arbitrary-precision rationals;
//! there is no floating point anywhere. `num::BigRational` keeps values
//! reduced with a positive denominator, which is also the canonical textual
//! form (`p/q`, or `p` when the denominator is 1).

use num::bigint::BigInt;
use num::traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Q = num::BigRational;

/// Parse `p/q` or an integer string. Rejects zero denominators instead of
/// panicking, so this is safe on untrusted input.
pub fn parse_rational(s: &str) -> Result<Q> {
    let t = s.trim();
    if t.is_empty() {
        return Err(Error::parse("empty rational"));
    }
    let (ns, ds) = match t.split_once('/') {
        Some((a, b)) => (a.trim(), Some(b.trim())),
        None => (t, None),
    };
    let numer: BigInt = ns
        .parse()
        .map_err(|_| Error::parse(format!("bad rational `{t}`")))?;
    let denom: BigInt = match ds {
        Some(b) => b
            .parse()
            .map_err(|_| Error::parse(format!("bad rational `{t}`")))?,
        None => BigInt::one(),
    };
    if denom.is_zero() {
        return Err(Error::parse(format!("zero denominator in `{t}`")));
    }
    Ok(Q::new(numer, denom))
}

pub fn q_int(k: i64) -> Q {
    Q::from_integer(BigInt::from(k))
}

pub fn q(numer: i64, denom: i64) -> Q {
    Q::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn factorial(k: usize) -> BigInt {
    let mut acc = BigInt::one();
    for i in 2..=k {
        acc *= BigInt::from(i);
    }
    acc
}

pub fn big_to_i64(x: &BigInt) -> Result<i64> {
    x.to_i64()
        .ok_or_else(|| Error::validation(format!("integer {x} out of range")))
}

/// Floor of a rational as an i64.
pub fn floor_i64(x: &Q) -> Result<i64> {
    big_to_i64(&x.floor().to_integer())
}

/// True when `x` is an integer.
pub fn is_integer(x: &Q) -> bool {
    x.is_integer()
}

/// True when `x` is a nonnegative integer.
pub fn is_nonneg_integer(x: &Q) -> bool {
    x.is_integer() && !x.is_negative()
}
