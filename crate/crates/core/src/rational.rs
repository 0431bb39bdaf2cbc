//! Helpers around [`BigRational`], the only coefficient type in the crate.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn half() -> BigRational {
    ratio(1, 2)
}

/// Parses `p` or `p/q` with an optional sign. The result is always reduced.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let text = text.trim();
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text, "1"),
    };
    let num: BigInt = num.parse().ok()?;
    let den: BigInt = den.parse().ok()?;
    if den.is_zero() {
        return None;
    }
    Some(BigRational::new(num, den))
}

pub fn to_f64(q: &BigRational) -> f64 {
    // Ratio::to_f64 handles big numerators without overflowing the
    // intermediate integer conversion.
    num_traits::ToPrimitive::to_f64(q).unwrap_or(f64::NAN)
}

pub fn is_one(q: &BigRational) -> bool {
    q.is_one()
}

pub fn is_negative(q: &BigRational) -> bool {
    q.is_negative()
}
