//! Exact rational numbers used for probabilities, thresholds and payoffs.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = num_rational::BigRational;

pub fn rat(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

pub fn in_unit(r: &Rational) -> bool {
    !r.is_negative() && *r <= Rational::one()
}

pub fn to_f64(r: &Rational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    r.to_f64().unwrap_or(f64::NAN)
}

/// Exact conversion of a finite binary64 value.
pub fn from_f64(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}

/// Lowest-terms text: `1/2`, `0`, `1`.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// `max(x, 0)`.
pub fn positive_part(x: Rational) -> Rational {
    if x.is_negative() {
        Rational::zero()
    } else {
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_text() {
        assert_eq!(format_rational(&rat(2, 4)), "1/2");
        assert_eq!(format_rational(&rat(3, 3)), "1");
        assert_eq!(format_rational(&rat(0, 7)), "0");
    }

    #[test]
    fn float_round_trip_is_exact() {
        let r = from_f64(0.1).unwrap();
        assert_eq!(to_f64(&r), 0.1);
        assert!(from_f64(f64::NAN).is_none());
    }

    #[test]
    fn unit_interval() {
        assert!(in_unit(&rat(0, 1)));
        assert!(in_unit(&rat(1, 1)));
        assert!(!in_unit(&rat(3, 2)));
        assert!(!in_unit(&rat(-1, 2)));
    }
}
