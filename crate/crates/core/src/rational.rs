//! Exact rational numbers used for every distance and every fractional quantity.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

pub type Rational = num_rational::BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn frac(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Formats as `numerator/denominator`, always with an explicit denominator.
pub fn format(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Parses `a`, `-a` or `a/b` with integer `a`, `b` and `b != 0`.
pub fn parse(s: &str) -> Option<Rational> {
    let s = s.trim();
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = n.parse().ok()?;
    let d: BigInt = d.parse().ok()?;
    if d.is_zero() {
        return None;
    }
    Some(Rational::new(n, d))
}

pub fn is_integer(q: &Rational) -> bool {
    q.denom().is_one()
}

/// Converts a non-negative integral rational to `u64`.
pub fn to_u64(q: &Rational) -> Option<u64> {
    if !is_integer(q) || q.is_negative() {
        return None;
    }
    q.numer().try_into().ok()
}

pub fn sum<'a, I: IntoIterator<Item = &'a Rational>>(it: I) -> Rational {
    it.into_iter().fold(Rational::zero(), |acc, q| acc + q)
}

/// Integer square root rounded up, for non-negative `n`.
pub fn isqrt_ceil(n: &BigInt) -> BigInt {
    let r = n.sqrt();
    if &(&r * &r) == n {
        r
    } else {
        r + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format() {
        assert_eq!(parse("3/6"), Some(frac(1, 2)));
        assert_eq!(parse(" 7 "), Some(int(7)));
        assert_eq!(parse("-2/4"), Some(frac(-1, 2)));
        assert_eq!(parse("1/0"), None);
        assert_eq!(parse("x"), None);
        assert_eq!(format(&int(5)), "5/1");
        assert_eq!(format(&frac(6, 4)), "3/2");
    }

    #[test]
    fn ceil_sqrt() {
        assert_eq!(isqrt_ceil(&BigInt::from(16)), BigInt::from(4));
        assert_eq!(isqrt_ceil(&BigInt::from(17)), BigInt::from(5));
        assert_eq!(isqrt_ceil(&BigInt::from(0)), BigInt::from(0));
    }
}
