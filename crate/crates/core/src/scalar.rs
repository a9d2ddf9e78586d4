//! Exact scalar arithmetic.
//!
//! Everything in this crate that decides a yes/no question runs over an
//! ordered field with exact arithmetic. Floating point types do not qualify
//! and are only used for the optional decimal rendering.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};
use std::fmt::{Debug, Display};
use std::hash::Hash;

/// An exact ordered field.
pub trait Scalar:
    Clone + Ord + Hash + Num + Signed + Debug + Display + Send + Sync + 'static
{
    fn from_int(n: i64) -> Self;

    fn ratio(n: i64, d: i64) -> Self {
        Self::from_int(n) / Self::from_int(d)
    }

    /// Canonical `p/q` rendering; the denominator is always printed.
    fn to_ratio_string(&self) -> String;

    /// Parses `p/q` or a bare integer `p`.
    fn parse_ratio(s: &str) -> Option<Self>;

    fn to_f64(&self) -> f64;

    /// Largest integer `n` with `n <= self`.
    fn floor_int(&self) -> BigInt;

    fn from_bigint(n: &BigInt) -> Self;

    /// Reduced numerator and positive denominator.
    fn to_bigints(&self) -> (BigInt, BigInt);

    fn max_of(a: Self, b: Self) -> Self {
        if a >= b {
            a
        } else {
            b
        }
    }

    fn min_of(a: Self, b: Self) -> Self {
        if a <= b {
            a
        } else {
            b
        }
    }

    fn pow_u(&self, mut e: u32) -> Self {
        let mut acc = Self::one();
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            e >>= 1;
            if e > 0 {
                base = base.clone() * base;
            }
        }
        acc
    }

    /// Least `p / cap` with `(p / cap)^2 >= self`.
    fn sqrt_upper(&self, cap: i64) -> Self {
        assert!(!self.is_negative(), "sqrt of a negative value");
        let capv = Self::from_int(cap);
        let scaled = self.clone() * capv.clone() * capv.clone();
        // smallest integer p with p^2 >= scaled
        let target = scaled.floor_int();
        let mut p = target.sqrt();
        loop {
            let pv = Self::from_bigint(&p);
            if pv.clone() * pv >= scaled {
                break;
            }
            p += 1;
        }
        while p > BigInt::zero() {
            let q = &p - 1;
            let qv = Self::from_bigint(&q);
            if qv.clone() * qv >= scaled {
                p = q;
            } else {
                break;
            }
        }
        Self::from_bigint(&p) / capv
    }
}

macro_rules! ratio_scalar {
    ($int:ty, $from_i64:expr, $from_big:expr) => {
        impl Scalar for Ratio<$int> {
            fn from_int(n: i64) -> Self {
                Ratio::from_integer($from_i64(n))
            }

            fn to_ratio_string(&self) -> String {
                format!("{}/{}", self.numer(), self.denom())
            }

            fn parse_ratio(s: &str) -> Option<Self> {
                let s = s.trim();
                let (n, d) = match s.split_once('/') {
                    Some((n, d)) => (n.trim(), d.trim()),
                    None => (s, "1"),
                };
                let n = <$int as Num>::from_str_radix(n, 10).ok()?;
                let d = <$int as Num>::from_str_radix(d, 10).ok()?;
                if d.is_zero() {
                    return None;
                }
                Some(Ratio::new(n, d))
            }

            fn to_f64(&self) -> f64 {
                let n = self.numer().to_f64().unwrap_or(f64::NAN);
                let d = self.denom().to_f64().unwrap_or(f64::NAN);
                n / d
            }

            fn floor_int(&self) -> BigInt {
                let f = self.floor();
                BigInt::from(f.to_integer())
            }

            fn from_bigint(n: &BigInt) -> Self {
                Ratio::from_integer($from_big(n))
            }

            fn to_bigints(&self) -> (BigInt, BigInt) {
                (BigInt::from(self.numer().clone()), BigInt::from(self.denom().clone()))
            }
        }
    };
}

ratio_scalar!(
    BigInt,
    |n: i64| BigInt::from(n),
    |n: &BigInt| n.clone()
);
ratio_scalar!(
    i64,
    |n: i64| n,
    |n: &BigInt| n.to_i64().expect("integer out of i64 range")
);

/// Binomial coefficient as an exact integer scalar.
pub fn binomial<T: Scalar>(n: u64, k: u64) -> T {
    if k > n {
        return T::zero();
    }
    let mut acc = BigInt::one();
    for i in 0..k {
        acc *= BigInt::from(n - i);
        acc = acc.div_floor(&BigInt::from(i + 1));
    }
    T::from_bigint(&acc)
}

#[allow(dead_code)]
pub(crate) fn from_usize<T: Scalar>(n: usize) -> T {
    T::from_int(i64::from_usize(n).expect("count out of range"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::{BigRational, Rational64};

    #[test]
    fn ratio_strings_always_carry_a_denominator() {
        let x = BigRational::from_int(4);
        assert_eq!(x.to_ratio_string(), "4/1");
        let y = BigRational::parse_ratio("6/4").unwrap();
        assert_eq!(y.to_ratio_string(), "3/2");
        assert_eq!(BigRational::parse_ratio("-7").unwrap().to_ratio_string(), "-7/1");
        assert!(BigRational::parse_ratio("1/0").is_none());
        assert!(BigRational::parse_ratio("x").is_none());
        assert_eq!(Rational64::parse_ratio("2/6").unwrap(), Rational64::new(1, 3));
    }

    #[test]
    fn sqrt_upper_is_least_on_grid() {
        let q = BigRational::ratio(1, 4);
        assert_eq!(q.sqrt_upper(1_000_000), BigRational::ratio(1, 2));
        let two = BigRational::from_int(2);
        let r = two.sqrt_upper(1000);
        assert_eq!(r, BigRational::ratio(1415, 1000));
        assert_eq!(BigRational::zero().sqrt_upper(10), BigRational::zero());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial::<BigRational>(6, 2), BigRational::from_int(15));
        assert_eq!(binomial::<BigRational>(3, 5), BigRational::zero());
    }
}
