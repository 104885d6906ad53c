//! Exact dyadic rationals `p / 2^m`.
//!
//! Every frequency endpoint, sequence value and interval boundary in the
//! combinatorial part of the crate is a dyadic rational, so a numerator and a
//! power-of-two exponent are enough to do all arithmetic exactly. Values are
//! kept reduced: the numerator is odd whenever the exponent is positive.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A dyadic rational `num / 2^exp` in lowest terms.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Dyadic {
    num: i128,
    exp: u32,
}

fn shl(x: i128, s: u32) -> i128 {
    if x == 0 {
        return 0;
    }
    assert!(
        s < 126 && x.unsigned_abs() <= (i128::MAX >> s) as u128,
        "dyadic overflow: {x} << {s}"
    );
    x << s
}

impl Dyadic {
    pub const ZERO: Dyadic = Dyadic { num: 0, exp: 0 };
    pub const ONE: Dyadic = Dyadic { num: 1, exp: 0 };

    /// `num / 2^exp`, reduced.
    pub fn new(num: i128, exp: u32) -> Self {
        let mut d = Dyadic { num, exp };
        d.reduce();
        d
    }

    pub fn from_int(n: i128) -> Self {
        Dyadic { num: n, exp: 0 }
    }

    /// `2^e` for any integer `e`.
    pub fn pow2(e: i32) -> Self {
        if e >= 0 {
            Dyadic::from_int(shl(1, e as u32))
        } else {
            Dyadic { num: 1, exp: (-e) as u32 }
        }
    }

    /// `k * 2^e`.
    pub fn scaled(k: i128, e: i32) -> Self {
        if e >= 0 {
            Dyadic::from_int(shl(k, e as u32))
        } else {
            Dyadic::new(k, (-e) as u32)
        }
    }

    fn reduce(&mut self) {
        if self.num == 0 {
            self.exp = 0;
            return;
        }
        let tz = self.num.trailing_zeros().min(self.exp);
        self.num >>= tz;
        self.exp -= tz;
    }

    pub fn numerator(&self) -> i128 {
        self.num
    }

    /// Exponent `m` of the reduced denominator `2^m`.
    pub fn denominator_exp(&self) -> u32 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn is_negative(&self) -> bool {
        self.num < 0
    }

    pub fn abs(self) -> Self {
        Dyadic { num: self.num.abs(), exp: self.exp }
    }

    /// Multiply by `2^e`.
    pub fn mul_pow2(self, e: i32) -> Self {
        if e >= 0 {
            let e = e as u32;
            if e <= self.exp {
                Dyadic { num: self.num, exp: self.exp - e }
            } else {
                Dyadic::from_int(shl(self.num, e - self.exp))
            }
        } else {
            Dyadic::new(self.num, self.exp + (-e) as u32)
        }
    }

    /// True iff the value is an integer multiple of `2^e`.
    pub fn is_multiple_of_pow2(&self, e: i32) -> bool {
        let scaled = self.mul_pow2(-e);
        scaled.exp == 0
    }

    /// Largest integer `k` with `k * 2^e <= self`.
    pub fn floor_div_pow2(&self, e: i32) -> i128 {
        let s = self.mul_pow2(-e);
        if s.exp == 0 {
            s.num
        } else {
            s.num.div_euclid(1i128 << s.exp)
        }
    }

    /// Largest integer multiple of `2^e` that is `<= self`.
    pub fn floor_to_pow2(&self, e: i32) -> Self {
        Dyadic::scaled(self.floor_div_pow2(e), e)
    }

    /// Product, or `None` on overflow.
    pub fn checked_mul(self, rhs: Dyadic) -> Option<Dyadic> {
        Some(Dyadic::new(self.num.checked_mul(rhs.num)?, self.exp.checked_add(rhs.exp)?))
    }

    /// Smallest integer `>= self`.
    pub fn ceil(&self) -> i128 {
        -(-*self).floor_div_pow2(0)
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / 2f64.powi(self.exp as i32)
    }

    /// Exact conversion of a finite `f64`; every finite double is dyadic.
    pub fn from_f64(x: f64) -> Option<Self> {
        if !x.is_finite() {
            return None;
        }
        if x == 0.0 {
            return Some(Dyadic::ZERO);
        }
        let bits = x.to_bits();
        let sign = if bits >> 63 == 1 { -1i128 } else { 1 };
        let exp_bits = ((bits >> 52) & 0x7ff) as i32;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, e) = if exp_bits == 0 {
            (frac as i128, -1074)
        } else {
            ((frac | (1u64 << 52)) as i128, exp_bits - 1075)
        };
        if e > 60 {
            return None;
        }
        Some(Dyadic::scaled(sign * mant, e))
    }

    /// Align two values to a common denominator `2^e`.
    fn align(a: Dyadic, b: Dyadic) -> (i128, i128, u32) {
        let e = a.exp.max(b.exp);
        (shl(a.num, e - a.exp), shl(b.num, e - b.exp), e)
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    /// Floor of the base-2 logarithm of a positive value.
    pub fn floor_log2(&self) -> i32 {
        assert!(self.num > 0, "floor_log2 of non-positive value");
        (127 - self.num.leading_zeros() as i32) - self.exp as i32
    }

    /// Smallest `e` with `2^e >= self` for a positive value.
    pub fn ceil_log2(&self) -> i32 {
        let f = self.floor_log2();
        if Dyadic::pow2(f) == *self {
            f
        } else {
            f + 1
        }
    }
}

impl Add for Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: Dyadic) -> Dyadic {
        let (a, b, e) = Dyadic::align(self, rhs);
        Dyadic::new(a.checked_add(b).expect("dyadic overflow"), e)
    }
}

impl Sub for Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: Dyadic) -> Dyadic {
        let (a, b, e) = Dyadic::align(self, rhs);
        Dyadic::new(a.checked_sub(b).expect("dyadic overflow"), e)
    }
}

impl Mul for Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: Dyadic) -> Dyadic {
        Dyadic::new(
            self.num.checked_mul(rhs.num).expect("dyadic overflow"),
            self.exp + rhs.exp,
        )
    }
}

impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic { num: -self.num, exp: self.exp }
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b, _) = Dyadic::align(*self, *other);
        a.cmp(&b)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<i64> for Dyadic {
    fn from(n: i64) -> Self {
        Dyadic::from_int(n as i128)
    }
}

impl fmt::Display for Dyadic {
    /// Renders as `p` for integers and `p/2^m` otherwise.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exp == 0 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/2^{}", self.num, self.exp)
        }
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for Dyadic {
    type Err = Error;

    /// Accepts `p`, `p/2^m` and `p/q` with `q` a power of two.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::ParseRational(s.to_string());
        let t = s.trim();
        let Some((num, den)) = t.split_once('/') else {
            return t.parse::<i128>().map(Dyadic::from_int).map_err(|_| bad());
        };
        let num: i128 = num.trim().parse().map_err(|_| bad())?;
        let den = den.trim();
        let exp = if let Some(m) = den.strip_prefix("2^") {
            m.parse::<u32>().map_err(|_| bad())?
        } else {
            let q: u128 = den.parse().map_err(|_| bad())?;
            if q == 0 || !q.is_power_of_two() {
                return Err(bad());
            }
            q.trailing_zeros()
        };
        if exp > 120 {
            return Err(bad());
        }
        Ok(Dyadic::new(num, exp))
    }
}

impl Serialize for Dyadic {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Dyadic {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parse a comma- or whitespace-separated list of dyadic rationals.
pub fn parse_list(s: &str) -> Result<Vec<Dyadic>> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(str::parse)
        .collect()
}
