//! Exact rational scalars and their `"p/q"` wire format.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// The scalar type used throughout: an arbitrary-precision rational,
/// always kept in lowest terms by `num-rational`.
pub type Rat = BigRational;

/// Build a rational from an integer pair.
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// Build a rational from an integer.
pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Render as `"p/q"`, or `"p"` when the denominator is 1.
///
/// This is the exact wire format used in every JSON and CSV artifact.
pub fn to_frac_string(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parse the `"p/q"` format; `"inf"` is not a rational and is rejected here.
pub fn from_frac_string(s: &str) -> Option<Rat> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().ok()?;
            let q: BigInt = q.trim().parse().ok()?;
            if q.is_zero() {
                None
            } else {
                Some(Rat::new(p, q))
            }
        }
        None => {
            let p: BigInt = s.parse().ok()?;
            Some(Rat::from_integer(p))
        }
    }
}

/// Positive part `max(r, 0)`.
pub fn pos_part(r: &Rat) -> Rat {
    if r.is_positive() {
        r.clone()
    } else {
        Rat::zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frac_string_round_trip() {
        let r = rat(-22, 7);
        let s = to_frac_string(&r);
        assert_eq!(s, "-22/7");
        assert_eq!(from_frac_string(&s).unwrap(), r);
        assert_eq!(to_frac_string(&rat_int(5)), "5");
        assert_eq!(from_frac_string("5").unwrap(), rat_int(5));
        assert_eq!(from_frac_string(" 3 / 9 ").unwrap(), rat(1, 3));
        assert!(from_frac_string("1/0").is_none());
        assert!(from_frac_string("inf").is_none());
    }
}
