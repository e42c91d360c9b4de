//! Exact rational scalars.
//!
//! Every quantity that feeds a strict comparison (radii, tolerances, arc
//! endpoints, sequence coefficients) is held as a [`Q`]. Floating-point
//! inputs are converted through their shortest decimal representation, so
//! `0.3` becomes `3/10` rather than the nearest binary fraction.

use std::cmp::Ordering;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact rational scalar used throughout the crate.
pub type Q = BigRational;

/// Integer as a rational.
pub fn int(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// `num / den` as a rational. Panics when `den == 0`.
pub fn ratio(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

/// Converts a float through its shortest round-trip decimal string.
///
/// Panics on non-finite input.
pub fn rat(x: f64) -> Q {
    assert!(x.is_finite(), "non-finite value {x} cannot be made exact");
    parse(&format!("{x:e}")).expect("formatted float always parses")
}

/// Parses `p/q`, decimals (`0.05`, `-1.5`) and scientific notation (`1e-9`).
pub fn parse(text: &str) -> Result<Q> {
    let s = text.trim();
    if s.is_empty() {
        return Err(Error::Parse("empty rational literal".to_string()));
    }
    if let Some((num, den)) = s.split_once('/') {
        let num = parse(num)?;
        let den = parse(den)?;
        if den.is_zero() {
            return Err(Error::Parse(format!("zero denominator in `{s}`")));
        }
        return Ok(num / den);
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let exp: i64 = s[pos + 1..]
                .parse()
                .map_err(|_| Error::Parse(format!("bad exponent in `{s}`")))?;
            (&s[..pos], exp)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty() || !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(Error::Parse(format!("`{s}` is not a rational literal")));
    }
    let joined = format!("{whole}{frac}");
    let mut value = Q::from_integer(
        BigInt::from_str(if joined.is_empty() { "0" } else { &joined })
            .map_err(|_| Error::Parse(format!("`{s}` is not a rational literal")))?,
    );
    let scale = exponent - frac.len() as i64;
    let ten = BigInt::from(10);
    if scale >= 0 {
        value *= Q::from_integer(ten.pow(scale as u32));
    } else {
        value /= Q::from_integer(ten.pow((-scale) as u32));
    }
    Ok(if negative { -value } else { value })
}

/// Nearest `f64`; saturates to `±inf` for huge magnitudes.
pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        if x.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Canonical text form: `p` for integers, `p/q` otherwise.
pub fn show(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Fractional part in `[0, 1)`.
pub fn frac(x: &Q) -> Q {
    x - Q::from_integer(x.numer().div_floor(x.denom()))
}

/// `base^exp` for a nonnegative exponent.
pub fn pow(base: &Q, exp: u64) -> Q {
    let mut acc = Q::one();
    let mut b = base.clone();
    let mut e = exp;
    while e > 0 {
        if e & 1 == 1 {
            acc *= &b;
        }
        b = &b * &b;
        e >>= 1;
    }
    acc
}

/// Square root of a nonnegative rational, rounded to `f64`.
pub fn sqrt_f64(x: &Q) -> f64 {
    to_f64(x).sqrt()
}

/// Exact test `sqrt(a) < b` for `a >= 0`.
pub fn sqrt_lt(a: &Q, b: &Q) -> bool {
    b.is_positive() && a < &(b * b)
}

/// Exact test `sqrt(a) >= b` for `a >= 0`.
pub fn sqrt_ge(a: &Q, b: &Q) -> bool {
    !sqrt_lt(a, b)
}

/// Total bit length of numerator and denominator.
pub fn bit_size(x: &Q) -> u64 {
    x.numer().bits() + x.denom().bits()
}

/// Minimum by exact order.
pub fn min(a: Q, b: Q) -> Q {
    match a.cmp(&b) {
        Ordering::Greater => b,
        _ => a,
    }
}

/// Maximum by exact order.
pub fn max(a: Q, b: Q) -> Q {
    match a.cmp(&b) {
        Ordering::Less => b,
        _ => a,
    }
}

/// Serde adapter storing a [`Q`] as its canonical string.
pub mod serde_q {
    use serde::{Deserialize, Deserializer, Serializer};

    use super::Q;

    pub fn serialize<S: Serializer>(x: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&super::show(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Q, D::Error> {
        let text = String::deserialize(d)?;
        super::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Option<Q>`.
pub mod serde_opt_q {
    use serde::{Deserialize, Deserializer, Serializer};

    use super::Q;

    pub fn serialize<S: Serializer>(x: &Option<Q>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match x {
            Some(v) => s.serialize_some(&super::show(v)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Q>, D::Error> {
        let text = Option::<String>::deserialize(d)?;
        text.map(|t| super::parse(&t).map_err(serde::de::Error::custom))
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_inputs_are_exact() {
        assert_eq!(rat(0.3), ratio(3, 10));
        assert_eq!(rat(0.3) - rat(0.1), rat(0.2));
        assert_eq!(rat(1e-9), ratio(1, 1_000_000_000));
        assert_eq!(rat(-1.25), ratio(-5, 4));
        assert_eq!(rat(1.2), ratio(6, 5));
    }

    #[test]
    fn parse_forms() {
        assert_eq!(parse("1/32").unwrap(), ratio(1, 32));
        assert_eq!(parse(" -3/6 ").unwrap(), ratio(-1, 2));
        assert_eq!(parse("2.5e2").unwrap(), int(250));
        assert_eq!(parse(".5").unwrap(), ratio(1, 2));
        assert!(parse("1/0").is_err());
        assert!(parse("abc").is_err());
        assert!(parse("").is_err());
    }

    #[test]
    fn frac_reduces_into_unit_interval() {
        assert_eq!(frac(&ratio(23, 20)), ratio(3, 20));
        assert_eq!(frac(&ratio(-1, 10)), ratio(9, 10));
        assert_eq!(frac(&int(3)), int(0));
    }

    #[test]
    fn sqrt_comparisons() {
        assert!(sqrt_lt(&int(2), &ratio(3, 2)));
        assert!(sqrt_ge(&int(4), &int(2)));
        assert!(!sqrt_lt(&int(0), &int(0)));
    }

    #[test]
    fn show_round_trips() {
        for x in [ratio(-7, 3), int(5), ratio(1, 1_000_000)] {
            assert_eq!(parse(&show(&x)).unwrap(), x);
        }
    }
}
