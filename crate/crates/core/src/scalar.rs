//! Exact scalars: rationals and Gaussian rationals.
//!
//! The base field for every computation in this crate is either ℚ or ℚ(i).
//! A [`Scalar`] is kept canonical: rationals are reduced with positive
//! denominator (delegated to `num_rational`), and a Gaussian value with zero
//! imaginary part normalizes to the `Rational` variant, so each value has
//! exactly one representation.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// An exact number in ℚ or ℚ(i).
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Scalar {
    Rational(BigRational),
    /// Invariant: `im` is nonzero (otherwise the value is stored as `Rational`).
    Gaussian { re: BigRational, im: BigRational },
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar::Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Scalar::Rational(BigRational::one())
    }

    /// The imaginary unit i.
    pub fn i() -> Self {
        Scalar::Gaussian {
            re: BigRational::zero(),
            im: BigRational::one(),
        }
    }

    pub fn from_int(n: i64) -> Self {
        Scalar::Rational(BigRational::from_integer(BigInt::from(n)))
    }

    /// num/den as a reduced rational. Panics if `den == 0`.
    pub fn from_fraction(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Scalar::Rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_rational(r: BigRational) -> Self {
        Scalar::Rational(r)
    }

    /// Builds re + im·i, normalizing to `Rational` when `im == 0`.
    pub fn gaussian(re: BigRational, im: BigRational) -> Self {
        if im.is_zero() {
            Scalar::Rational(re)
        } else {
            Scalar::Gaussian { re, im }
        }
    }

    pub fn re(&self) -> BigRational {
        match self {
            Scalar::Rational(r) => r.clone(),
            Scalar::Gaussian { re, .. } => re.clone(),
        }
    }

    pub fn im(&self) -> BigRational {
        match self {
            Scalar::Rational(_) => BigRational::zero(),
            Scalar::Gaussian { im, .. } => im.clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Scalar::Rational(r) if r.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Scalar::Rational(r) if r.is_one())
    }

    /// True when the value lies in ℚ.
    pub fn is_rational(&self) -> bool {
        matches!(self, Scalar::Rational(_))
    }

    /// The rational value, or `None` for a properly Gaussian one.
    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Scalar::Rational(r) => Some(r),
            Scalar::Gaussian { .. } => None,
        }
    }

    pub fn conj(&self) -> Self {
        match self {
            Scalar::Rational(r) => Scalar::Rational(r.clone()),
            Scalar::Gaussian { re, im } => Scalar::Gaussian {
                re: re.clone(),
                im: -im.clone(),
            },
        }
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inverse(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        match self {
            Scalar::Rational(r) => Some(Scalar::Rational(r.recip())),
            Scalar::Gaussian { re, im } => {
                // 1/(a+bi) = (a-bi)/(a²+b²)
                let norm = re * re + im * im;
                Some(Scalar::gaussian(re / &norm, -(im / &norm)))
            }
        }
    }

    /// Sign of a rational scalar: -1, 0, +1. `None` for Gaussian values.
    pub fn sign(&self) -> Option<i32> {
        self.as_rational().map(|r| {
            if r.is_zero() {
                0
            } else if r.is_positive() {
                1
            } else {
                -1
            }
        })
    }
}

impl Add for &Scalar {
    type Output = Scalar;
    fn add(self, rhs: &Scalar) -> Scalar {
        Scalar::gaussian(self.re() + rhs.re(), self.im() + rhs.im())
    }
}

impl Sub for &Scalar {
    type Output = Scalar;
    fn sub(self, rhs: &Scalar) -> Scalar {
        Scalar::gaussian(self.re() - rhs.re(), self.im() - rhs.im())
    }
}

impl Mul for &Scalar {
    type Output = Scalar;
    fn mul(self, rhs: &Scalar) -> Scalar {
        match (self, rhs) {
            (Scalar::Rational(a), Scalar::Rational(b)) => Scalar::Rational(a * b),
            _ => {
                let (a, b) = (self.re(), self.im());
                let (c, d) = (rhs.re(), rhs.im());
                Scalar::gaussian(&a * &c - &b * &d, &a * &d + &b * &c)
            }
        }
    }
}

impl Div for &Scalar {
    type Output = Scalar;
    fn div(self, rhs: &Scalar) -> Scalar {
        let inv = rhs.inverse().expect("division by zero scalar");
        self * &inv
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Rational(r) => Scalar::Rational(-r),
            Scalar::Gaussian { re, im } => Scalar::Gaussian {
                re: -re,
                im: -im,
            },
        }
    }
}

macro_rules! forward_owned {
    ($trait:ident, $method:ident) => {
        impl $trait for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                (&self).$method(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Rational(r) => write!(f, "{}", r),
            Scalar::Gaussian { re, im } => {
                if re.is_zero() {
                    write!(f, "{}i", im)
                } else if im.is_negative() {
                    write!(f, "{}{}i", re, im)
                } else {
                    write!(f, "{}+{}i", re, im)
                }
            }
        }
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

// JSON form: rationals as {"num": n, "den": d}, Gaussian values as
// {"re": rational, "im": rational}. Integers that do not fit in an i64 are
// carried as decimal strings so round-trips stay exact at any size.

fn bigint_to_json(n: &BigInt) -> serde_json::Value {
    match i64::try_from(n.clone()) {
        Ok(v) => serde_json::Value::from(v),
        Err(_) => serde_json::Value::from(n.to_string()),
    }
}

fn bigint_from_json(v: &serde_json::Value) -> Result<BigInt, String> {
    match v {
        serde_json::Value::Number(n) => n
            .as_i64()
            .map(BigInt::from)
            .ok_or_else(|| format!("integer out of range: {n}")),
        serde_json::Value::String(s) => s
            .parse::<BigInt>()
            .map_err(|e| format!("bad integer literal {s:?}: {e}")),
        other => Err(format!("expected integer, got {other}")),
    }
}

pub(crate) fn rational_to_json(r: &BigRational) -> serde_json::Value {
    let mut map = serde_json::Map::new();
    map.insert("num".into(), bigint_to_json(r.numer()));
    map.insert("den".into(), bigint_to_json(r.denom()));
    serde_json::Value::Object(map)
}

pub(crate) fn rational_from_json(v: &serde_json::Value) -> Result<BigRational, String> {
    match v {
        // bare integers are accepted as a convenience
        serde_json::Value::Number(_) | serde_json::Value::String(_) => {
            Ok(BigRational::from_integer(bigint_from_json(v)?))
        }
        serde_json::Value::Object(map) => {
            let num = map
                .get("num")
                .ok_or_else(|| "rational missing \"num\"".to_string())?;
            let den = map
                .get("den")
                .ok_or_else(|| "rational missing \"den\"".to_string())?;
            let num = bigint_from_json(num)?;
            let den = bigint_from_json(den)?;
            if den.is_zero() {
                return Err("rational with zero denominator".into());
            }
            Ok(BigRational::new(num, den))
        }
        other => Err(format!("expected rational, got {other}")),
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let value = match self {
            Scalar::Rational(r) => rational_to_json(r),
            Scalar::Gaussian { re, im } => {
                let mut map = serde_json::Map::new();
                map.insert("re".into(), rational_to_json(re));
                map.insert("im".into(), rational_to_json(im));
                serde_json::Value::Object(map)
            }
        };
        value.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = serde_json::Value::deserialize(deserializer)?;
        scalar_from_json(&value).map_err(D::Error::custom)
    }
}

pub(crate) fn scalar_from_json(v: &serde_json::Value) -> Result<Scalar, String> {
    match v {
        serde_json::Value::Object(map) if map.contains_key("re") || map.contains_key("im") => {
            let re = match map.get("re") {
                Some(r) => rational_from_json(r)?,
                None => BigRational::zero(),
            };
            let im = match map.get("im") {
                Some(r) => rational_from_json(r)?,
                None => BigRational::zero(),
            };
            Ok(Scalar::gaussian(re, im))
        }
        other => Ok(Scalar::Rational(rational_from_json(other)?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Scalar {
        Scalar::from_fraction(n, d)
    }

    #[test]
    fn canonical_reduction() {
        assert_eq!(q(2, 4), q(1, 2));
        assert_eq!(q(1, -2), q(-1, 2));
        let g = Scalar::gaussian(
            BigRational::from_integer(3.into()),
            BigRational::zero(),
        );
        assert!(g.is_rational());
    }

    #[test]
    fn gaussian_arithmetic() {
        let i = Scalar::i();
        assert_eq!(&i * &i, Scalar::from_int(-1));
        let z = Scalar::gaussian(
            BigRational::from_integer(1.into()),
            BigRational::from_integer(2.into()),
        );
        let w = z.inverse().unwrap();
        assert!( (&z * &w).is_one() );
        // conj multiplication gives the norm
        let n = &z * &z.conj();
        assert_eq!(n, Scalar::from_int(5));
    }

    #[test]
    fn add_sub_roundtrip() {
        let a = q(7, 3);
        let b = Scalar::gaussian(
            BigRational::new(1.into(), 5.into()),
            BigRational::new((-2).into(), 7.into()),
        );
        let sum = &a + &b;
        assert_eq!(&sum - &b, a);
    }

    #[test]
    fn json_roundtrip() {
        for s in [
            q(0, 1),
            q(-7, 3),
            Scalar::i(),
            Scalar::gaussian(
                BigRational::new(22.into(), 7.into()),
                BigRational::new((-1).into(), 2.into()),
            ),
        ] {
            let text = serde_json::to_string(&s).unwrap();
            let back: Scalar = serde_json::from_str(&text).unwrap();
            assert_eq!(back, s);
        }
    }

    #[test]
    fn json_rejects_zero_denominator() {
        let r: Result<Scalar, _> = serde_json::from_str(r#"{"num":1,"den":0}"#);
        assert!(r.is_err());
    }

    #[test]
    fn json_large_integers_via_strings() {
        let big = Scalar::Rational(BigRational::new(
            "123456789012345678901234567890".parse().unwrap(),
            7.into(),
        ));
        let text = serde_json::to_string(&big).unwrap();
        let back: Scalar = serde_json::from_str(&text).unwrap();
        assert_eq!(back, big);
    }
}
