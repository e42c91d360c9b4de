//! Finitely supported coefficient sequences over `ℕ₀` or `ℤ`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_traits::{Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::exact::{self, Q};

/// A sparse vector with exact rational coefficients.
///
/// Only nonzero coefficients are stored, so two vectors are equal exactly
/// when their coefficient maps are equal.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct SparseVec {
    coeffs: BTreeMap<i64, Q>,
}

impl SparseVec {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Canonical basis vector `e_index`.
    pub fn basis(index: i64) -> Self {
        Self::from_pairs([(index, exact::int(1))])
    }

    pub fn from_pairs<I: IntoIterator<Item = (i64, Q)>>(pairs: I) -> Self {
        let mut v = Self::zero();
        for (i, c) in pairs {
            v.add_at(i, &c);
        }
        v
    }

    pub fn get(&self, index: i64) -> Q {
        self.coeffs.get(&index).cloned().unwrap_or_else(Q::zero)
    }

    /// Adds `c` to the coefficient at `index`, dropping exact zeros.
    pub fn add_at(&mut self, index: i64, c: &Q) {
        if c.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(index).or_insert_with(Q::zero);
        *entry += c;
        if entry.is_zero() {
            self.coeffs.remove(&index);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.coeffs.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, &Q)> + '_ {
        self.coeffs.iter().map(|(i, c)| (*i, c))
    }

    pub fn min_index(&self) -> Option<i64> {
        self.coeffs.keys().next().copied()
    }

    pub fn max_index(&self) -> Option<i64> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn scale(&self, s: &Q) -> Self {
        if s.is_zero() {
            return Self::zero();
        }
        Self {
            coeffs: self.coeffs.iter().map(|(i, c)| (*i, c * s)).collect(),
        }
    }

    /// Moves every coefficient from index `i` to `i + offset`.
    pub fn translate(&self, offset: i64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|(i, c)| (i + offset, c.clone())).collect(),
        }
    }

    /// Exact squared ℓ² norm.
    pub fn norm_sq(&self) -> Q {
        sum_of_squares(self.coeffs.values().cloned())
    }

    pub fn norm(&self) -> f64 {
        exact::sqrt_f64(&self.norm_sq())
    }

    /// Exact squared ℓ² distance.
    pub fn dist_sq(&self, other: &Self) -> Q {
        let mut diffs = Vec::new();
        let mut a = self.coeffs.iter().peekable();
        let mut b = other.coeffs.iter().peekable();
        loop {
            let d = match (a.peek(), b.peek()) {
                (Some((i, x)), Some((j, y))) if i == j => {
                    let d = *x - *y;
                    a.next();
                    b.next();
                    d
                }
                (Some((i, x)), Some((j, _))) if i < j => {
                    let d = (*x).clone();
                    a.next();
                    d
                }
                (_, Some((_, y))) => {
                    let d = -(*y).clone();
                    b.next();
                    d
                }
                (Some((_, x)), None) => {
                    let d = (*x).clone();
                    a.next();
                    d
                }
                (None, None) => break,
            };
            diffs.push(d);
        }
        sum_of_squares(diffs)
    }

    /// Largest coefficient bit size, used to bound runaway growth.
    pub fn max_bit_size(&self) -> u64 {
        self.coeffs.values().map(exact::bit_size).max().unwrap_or(0)
    }

    /// Linear interpolation `self + t (other - self)`.
    pub fn lerp(&self, other: &Self, t: &Q) -> Self {
        self + &(other - self).scale(t)
    }

    pub fn all_nonnegative_indices(&self) -> bool {
        self.min_index().is_none_or(|i| i >= 0)
    }

    pub fn max_abs_coeff(&self) -> Q {
        self.coeffs.values().map(|c| c.abs()).max().unwrap_or_else(Q::zero)
    }
}

impl Add for &SparseVec {
    type Output = SparseVec;

    fn add(self, rhs: &SparseVec) -> SparseVec {
        let mut out = self.clone();
        for (i, c) in rhs.iter() {
            out.add_at(i, c);
        }
        out
    }
}

impl Sub for &SparseVec {
    type Output = SparseVec;

    fn sub(self, rhs: &SparseVec) -> SparseVec {
        let mut out = self.clone();
        for (i, c) in rhs.iter() {
            out.add_at(i, &-c);
        }
        out
    }
}

/// Exact `Σ c²`, accumulated over a common denominator and reduced once.
fn sum_of_squares<I: IntoIterator<Item = Q>>(coeffs: I) -> Q {
    use num_bigint::BigInt;
    use num_integer::Integer;
    use num_traits::One;
    let mut num = BigInt::zero();
    let mut den = BigInt::one();
    for c in coeffs {
        let p2 = c.numer() * c.numer();
        let q2 = c.denom() * c.denom();
        if (&den % &q2).is_zero() {
            num += p2 * (&den / &q2);
        } else if (&q2 % &den).is_zero() {
            num = num * (&q2 / &den) + p2;
            den = q2;
        } else {
            let g = den.gcd(&q2);
            let l = &den / &g * &q2;
            num = num * (&l / &den) + p2 * (&l / &q2);
            den = l;
        }
    }
    Q::new(num, den)
}

impl Neg for &SparseVec {
    type Output = SparseVec;

    fn neg(self) -> SparseVec {
        self.scale(&exact::int(-1))
    }
}

impl fmt::Display for SparseVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let terms: Vec<String> = self.iter().map(|(i, c)| format!("{}·e_{i}", exact::show(c))).collect();
        write!(f, "{}", terms.join(" + "))
    }
}

impl Serialize for SparseVec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<(i64, String)> = self.iter().map(|(i, c)| (i, exact::show(c))).collect();
        pairs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SparseVec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pairs = Vec::<(i64, String)>::deserialize(d)?;
        let mut v = SparseVec::zero();
        for (i, text) in pairs {
            let c = exact::parse(&text).map_err(serde::de::Error::custom)?;
            v.add_at(i, &c);
        }
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, ratio};

    #[test]
    fn orthonormal_basis_distance() {
        let d = SparseVec::basis(0).dist_sq(&SparseVec::basis(1));
        assert_eq!(d, int(2));
    }

    #[test]
    fn cancellation_drops_entries() {
        let v = SparseVec::from_pairs([(3, ratio(1, 2)), (3, ratio(-1, 2)), (1, int(2))]);
        assert_eq!(v.nnz(), 1);
        assert_eq!(v.max_index(), Some(1));
    }

    #[test]
    fn serde_round_trip() {
        let v = SparseVec::from_pairs([(-2, ratio(3, 7)), (5, int(-1))]);
        let text = serde_json::to_string(&v).unwrap();
        assert_eq!(text, r#"[[-2,"3/7"],[5,"-1"]]"#);
        let back: SparseVec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, v);
    }
}
