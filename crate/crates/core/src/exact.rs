//! Exact dyadic and rational values.
//!
//! Every probability arising from flat sources with power-of-two supports and
//! uniform registers is a dyadic rational, so the oracle reduces in `Dyadic`
//! and reports `BigRational`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

/// `num / 2^exp`, always normalized so that `num` is odd or `exp == 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct Dyadic {
    num: u128,
    exp: u32,
}

impl Dyadic {
    pub const ZERO: Dyadic = Dyadic { num: 0, exp: 0 };
    pub const ONE: Dyadic = Dyadic { num: 1, exp: 0 };

    pub fn new(num: u128, exp: u32) -> Self {
        let mut d = Dyadic { num, exp };
        d.normalize();
        d
    }

    fn normalize(&mut self) {
        if self.num == 0 {
            self.exp = 0;
            return;
        }
        let tz = self.num.trailing_zeros().min(self.exp);
        self.num >>= tz;
        self.exp -= tz;
    }

    pub fn numerator(&self) -> u128 {
        self.num
    }

    pub fn exponent(&self) -> u32 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    /// Rescales both operands to the larger exponent.
    fn aligned(a: Dyadic, b: Dyadic) -> (u128, u128, u32) {
        let e = a.exp.max(b.exp);
        let an = a.num.checked_shl(e - a.exp).filter(|v| v >> (e - a.exp) == a.num);
        let bn = b.num.checked_shl(e - b.exp).filter(|v| v >> (e - b.exp) == b.num);
        (
            an.expect("dyadic overflow"),
            bn.expect("dyadic overflow"),
            e,
        )
    }

    pub fn add(self, other: Dyadic) -> Dyadic {
        let (a, b, e) = Self::aligned(self, other);
        Dyadic::new(a.checked_add(b).expect("dyadic overflow"), e)
    }

    pub fn mul(self, other: Dyadic) -> Dyadic {
        Dyadic::new(
            self.num.checked_mul(other.num).expect("dyadic overflow"),
            self.exp + other.exp,
        )
    }

    /// Multiplies by the integer `k`.
    pub fn scale(self, k: u128) -> Dyadic {
        Dyadic::new(self.num.checked_mul(k).expect("dyadic overflow"), self.exp)
    }

    pub fn to_rational(&self) -> BigRational {
        BigRational::new(BigInt::from(self.num), BigInt::one() << self.exp as usize)
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / 2f64.powi(self.exp as i32)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b, _) = Self::aligned(*self, *other);
        a.cmp(&b)
    }
}

/// A serializable exact rational with its float rendering.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactValue {
    /// `"p/q"` in lowest terms.
    pub exact: String,
    pub approx: f64,
}

impl ExactValue {
    pub fn from_rational(r: &BigRational) -> Self {
        ExactValue { exact: format!("{}/{}", r.numer(), r.denom()), approx: rational_to_f64(r) }
    }

    pub fn from_dyadic(d: Dyadic) -> Self {
        Self::from_rational(&d.to_rational())
    }

    pub fn parse(&self) -> Option<BigRational> {
        parse_rational(&self.exact)
    }
}

pub fn parse_rational(s: &str) -> Option<BigRational> {
    let (p, q) = s.split_once('/').unwrap_or((s, "1"));
    let p: BigInt = p.trim().parse().ok()?;
    let q: BigInt = q.trim().parse().ok()?;
    if q.is_zero() {
        return None;
    }
    Some(BigRational::new(p, q))
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Exact `r ≤ 2^{-a/b}` test for a rational `r ≥ 0` and integers `a ≥ 0`, `b > 0`,
/// decided as `r^b · 2^a ≤ 1`.
pub fn rational_le_pow2_neg(r: &BigRational, a: u32, b: u32) -> bool {
    let mut lhs = BigRational::one();
    for _ in 0..b {
        lhs *= r;
    }
    lhs *= BigRational::from_integer(BigInt::one() << a as usize);
    lhs <= BigRational::one()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_arithmetic() {
        let a = Dyadic::new(3, 2); // 3/4
        let b = Dyadic::new(1, 3); // 1/8
        assert_eq!(a.add(b), Dyadic::new(7, 3));
        assert!(b < a);
        assert_eq!(Dyadic::new(4, 3), Dyadic::new(1, 1));
        assert_eq!(a.mul(b), Dyadic::new(3, 5));
        assert_eq!(ExactValue::from_dyadic(a).exact, "3/4");
    }

    #[test]
    fn power_comparisons() {
        let half = BigRational::new(1.into(), 2.into());
        // 1/2 ≤ 2^{-1/2}
        assert!(rational_le_pow2_neg(&half, 1, 2));
        let r = BigRational::new(3.into(), 4.into());
        assert!(!rational_le_pow2_neg(&r, 1, 2));
    }
}
