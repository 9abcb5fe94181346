//! Exact rational numbers and exact logarithm ratios.
//!
//! [`Rational`] is a thin newtype over `num_rational::BigRational` with a
//! stable `"p/q"` text form. [`LogRatio`] represents `log(argument)/log(base)`
//! for rationals `> 1` and decides equality exactly whenever the two bases
//! are integer powers of a common rational.

use std::cmp::Ordering;
use std::fmt;
use std::iter::{Product, Sum};
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest exponent tried when extracting perfect-power roots.
pub const MAX_ROOT_EXPONENT: u32 = 64;

/// Exact arbitrary-precision fraction, always in lowest terms with a
/// positive denominator.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rational(BigRational);

impl Rational {
    pub fn new(numer: impl Into<BigInt>, denom: impl Into<BigInt>) -> Result<Self> {
        let denom = denom.into();
        if denom.is_zero() {
            return Err(Error::Parse("zero denominator".into()));
        }
        Ok(Rational(BigRational::new(numer.into(), denom)))
    }

    pub fn from_integer(n: impl Into<BigInt>) -> Self {
        Rational(BigRational::from_integer(n.into()))
    }

    /// `n/d` for small literals; panics on a zero denominator.
    pub fn ratio(n: i64, d: i64) -> Self {
        assert!(d != 0, "zero denominator");
        Rational(BigRational::new(n.into(), d.into()))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    pub fn recip(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::InvalidArgument("reciprocal of zero".into()));
        }
        Ok(Rational(self.0.recip()))
    }

    pub fn pow(&self, exp: u32) -> Self {
        Rational(num_traits::pow(self.0.clone(), exp as usize))
    }

    pub fn to_f64(&self) -> f64 {
        match self.0.to_f64() {
            Some(v) if v.is_finite() => v,
            _ => {
                // Out of f64 range: go through logarithms.
                let sign = if self.is_negative() { -1.0 } else { 1.0 };
                sign * (ln_bigint(&self.numer().abs()) - ln_bigint(self.denom())).exp()
            }
        }
    }

    /// Natural logarithm of a positive rational, accurate to a few ulps.
    pub fn ln(&self) -> f64 {
        assert!(self.is_positive(), "ln of non-positive rational");
        let n = self.numer();
        let d = self.denom();
        // Near 1 the difference of logs cancels; use ln_1p on (n - d)/d.
        let delta = Rational(BigRational::new(n - d, d.clone()));
        let x = delta.0.to_f64().unwrap_or(f64::INFINITY);
        if x.abs() < 0.5 {
            x.ln_1p()
        } else {
            ln_bigint(n) - ln_bigint(d)
        }
    }

    pub fn inner(&self) -> &BigRational {
        &self.0
    }

    /// Exact `k`-th root when `self` is a perfect `k`-th power of a rational.
    pub fn exact_root(&self, k: u32) -> Option<Self> {
        if k == 0 {
            return None;
        }
        if k == 1 {
            return Some(self.clone());
        }
        if self.is_negative() && k % 2 == 0 {
            return None;
        }
        let n = exact_int_root(self.numer(), k)?;
        let d = exact_int_root(self.denom(), k)?;
        Some(Rational(BigRational::new(n, d)))
    }

    /// Decomposes a rational `q > 1` as `root^exponent` with the largest
    /// exponent `<= MAX_ROOT_EXPONENT`. The root of a non-perfect-power is
    /// `q` itself with exponent 1.
    pub fn perfect_power(&self) -> (Rational, u32) {
        for k in (2..=MAX_ROOT_EXPONENT).rev() {
            if let Some(r) = self.exact_root(k) {
                return (r, k);
            }
        }
        (self.clone(), 1)
    }
}

fn exact_int_root(n: &BigInt, k: u32) -> Option<BigInt> {
    if n.is_zero() || n.is_one() {
        return Some(n.clone());
    }
    let r = n.nth_root(k);
    if num_traits::pow(r.clone(), k as usize) == *n {
        Some(r)
    } else {
        None
    }
}

/// `ln(n)` for a positive big integer, via its leading 64 bits.
pub fn ln_bigint(n: &BigInt) -> f64 {
    assert!(n.sign() == Sign::Plus, "ln of non-positive integer");
    let bits = n.bits();
    if bits <= 1000 {
        return n.to_f64().expect("fits in f64").ln();
    }
    let shift = bits - 64;
    let top: BigInt = n >> shift;
    top.to_f64().expect("64-bit value").ln() + shift as f64 * std::f64::consts::LN_2
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for Rational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let parse_int = |t: &str| -> Result<BigInt> {
            let t = t.trim();
            let digits = t.strip_prefix(['-', '+']).unwrap_or(t);
            if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
                return Err(Error::Parse(format!("not an integer: {t:?}")));
            }
            BigInt::from_str(t).map_err(|e| Error::Parse(format!("{t:?}: {e}")))
        };
        match s.split_once('/') {
            Some((n, d)) => Rational::new(parse_int(n)?, parse_int(d)?),
            None => Ok(Rational::from_integer(parse_int(s)?)),
        }
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_integer(n)
    }
}

impl From<BigRational> for Rational {
    fn from(r: BigRational) -> Self {
        Rational(r)
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait<Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(self.0.$method(rhs.0))
            }
        }
        impl<'a> $trait<&'a Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &'a Rational) -> Rational {
                Rational(self.0.$method(&rhs.0))
            }
        }
        impl<'a> $trait<Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational((&self.0).$method(rhs.0))
            }
        }
        impl<'a, 'b> $trait<&'b Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: &'b Rational) -> Rational {
                Rational((&self.0).$method(&rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl AddAssign<&Rational> for Rational {
    fn add_assign(&mut self, rhs: &Rational) {
        self.0 += &rhs.0;
    }
}

impl SubAssign<&Rational> for Rational {
    fn sub_assign(&mut self, rhs: &Rational) {
        self.0 -= &rhs.0;
    }
}

impl MulAssign<&Rational> for Rational {
    fn mul_assign(&mut self, rhs: &Rational) {
        self.0 *= &rhs.0;
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Self {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a Rational> for Rational {
    fn sum<I: Iterator<Item = &'a Rational>>(iter: I) -> Self {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

impl Product for Rational {
    fn product<I: Iterator<Item = Rational>>(iter: I) -> Self {
        iter.fold(Rational::one(), |acc, x| acc * x)
    }
}

/// An exponent `log(argument) / log(base)` with rational `argument, base > 1`.
#[derive(Clone, Debug, Serialize)]
pub struct LogRatio {
    argument: Rational,
    base: Rational,
    float_value: f64,
}

/// Result of comparing two log ratios over a common base.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PowerComparison {
    /// Common primitive base `g` with `base_a = g^k_a`, `base_b = g^k_b`.
    pub common_base: Rational,
    /// Power applied to `a.argument` (equals `k_b / gcd`).
    pub power_a: u32,
    /// Power applied to `b.argument` (equals `k_a / gcd`).
    pub power_b: u32,
    /// `a.argument^power_a` compared with `b.argument^power_b`.
    pub lhs: Rational,
    pub rhs: Rational,
    pub ordering: Ordering,
}

impl LogRatio {
    pub fn new(argument: Rational, base: Rational) -> Result<Self> {
        let one = Rational::one();
        if argument <= one || base <= one {
            return Err(Error::InvalidArgument(format!(
                "log ratio needs argument and base > 1, got log({argument})/log({base})"
            )));
        }
        let float_value = argument.ln() / base.ln();
        Ok(LogRatio {
            argument,
            base,
            float_value,
        })
    }

    pub fn argument(&self) -> &Rational {
        &self.argument
    }

    pub fn base(&self) -> &Rational {
        &self.base
    }

    pub fn value(&self) -> f64 {
        self.float_value
    }

    /// Exact comparison when the bases are commensurable (integer powers of
    /// one rational); `None` otherwise.
    ///
    /// `log a / log g^ka` vs `log b / log g^kb` reduces to `a^kb` vs `b^ka`.
    pub fn compare_exact(&self, other: &LogRatio) -> Option<PowerComparison> {
        let (root_a, k_a) = self.base.perfect_power();
        let (root_b, k_b) = other.base.perfect_power();
        if root_a != root_b {
            return None;
        }
        let g = k_a.gcd(&k_b);
        let power_a = k_b / g;
        let power_b = k_a / g;
        let lhs = self.argument.pow(power_a);
        let rhs = other.argument.pow(power_b);
        let ordering = lhs.cmp(&rhs);
        Some(PowerComparison {
            common_base: root_a,
            power_a,
            power_b,
            lhs,
            rhs,
            ordering,
        })
    }

    /// The value as a rational when the argument and base are powers of one
    /// common root, e.g. `log 4 / log 2 = 2`.
    pub fn as_rational(&self) -> Option<Rational> {
        let (ra, ka) = self.argument.perfect_power();
        let (rb, kb) = self.base.perfect_power();
        (ra == rb).then(|| Rational::ratio(ka as i64, kb as i64))
    }

    /// Exact equality in the commensurable fragment.
    pub fn exactly_equals(&self, other: &LogRatio) -> Option<bool> {
        self.compare_exact(other).map(|c| c.ordering == Ordering::Equal)
    }
}

impl fmt::Display for LogRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "log({})/log({})", self.argument, self.base)
    }
}
