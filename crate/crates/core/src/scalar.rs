//! Scalar regimes and exact arithmetic.
//!
//! Exact regimes form a small lattice: `Integer ⊂ Rational ⊂ Float`, with
//! `GaussianInteger ⊃ Integer` on a separate branch. Binary operations promote
//! both operands to the join of their regimes; joining the Gaussian branch with
//! anything non-integer is rejected.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Integer,
    Rational,
    GaussianInteger,
    Float,
}

impl Regime {
    pub fn is_exact(self) -> bool {
        self != Regime::Float
    }

    /// Weakest regime containing both `self` and `other`.
    pub fn join(self, other: Regime) -> Result<Regime> {
        use Regime::*;
        match (self, other) {
            (a, b) if a == b => Ok(a),
            (Integer, b) | (b, Integer) => Ok(b),
            (Rational, Float) | (Float, Rational) => Ok(Float),
            (a, b) => Err(Error::RegimeMismatch(a, b)),
        }
    }
}

/// Element of `Z + iZ`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GaussInt {
    pub re: BigInt,
    pub im: BigInt,
}

impl GaussInt {
    pub fn new(re: impl Into<BigInt>, im: impl Into<BigInt>) -> Self {
        GaussInt { re: re.into(), im: im.into() }
    }

    pub fn norm_sqr(&self) -> BigInt {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
}

impl fmt::Display for GaussInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_negative() {
            write!(f, "{}-{}i", self.re, -&self.im)
        } else {
            write!(f, "{}+{}i", self.re, self.im)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Scalar {
    Int(BigInt),
    Rat(BigRational),
    Gauss(GaussInt),
    Float(f64),
}

impl Scalar {
    pub fn int(v: i64) -> Scalar {
        Scalar::Int(BigInt::from(v))
    }

    pub fn ratio(num: i64, den: i64) -> Scalar {
        Scalar::Rat(BigRational::new(num.into(), den.into()))
    }

    pub fn gauss(re: i64, im: i64) -> Scalar {
        Scalar::Gauss(GaussInt::new(re, im))
    }

    pub fn zero_in(regime: Regime) -> Scalar {
        Scalar::int(0).coerce(regime).expect("0 lives in every regime")
    }

    pub fn one_in(regime: Regime) -> Scalar {
        Scalar::int(1).coerce(regime).expect("1 lives in every regime")
    }

    pub fn regime(&self) -> Regime {
        match self {
            Scalar::Int(_) => Regime::Integer,
            Scalar::Rat(_) => Regime::Rational,
            Scalar::Gauss(_) => Regime::GaussianInteger,
            Scalar::Float(_) => Regime::Float,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Int(v) => v.is_zero(),
            Scalar::Rat(v) => v.is_zero(),
            Scalar::Gauss(v) => v.is_zero(),
            Scalar::Float(v) => *v == 0.0,
        }
    }

    /// True for values that are rational integers (Gaussian integers with
    /// zero imaginary part count).
    pub fn is_integer(&self) -> bool {
        match self {
            Scalar::Int(_) => true,
            Scalar::Rat(v) => v.is_integer(),
            Scalar::Gauss(v) => v.im.is_zero(),
            Scalar::Float(v) => v.fract() == 0.0,
        }
    }

    /// Real part as `f64`. Gaussian integers map to their real part.
    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Int(v) => v.to_f64().unwrap_or(f64::NAN),
            Scalar::Rat(v) => rational_to_f64(v),
            Scalar::Gauss(v) => v.re.to_f64().unwrap_or(f64::NAN),
            Scalar::Float(v) => *v,
        }
    }

    /// Modulus as `f64`.
    pub fn abs_f64(&self) -> f64 {
        match self {
            Scalar::Gauss(v) => {
                let re = v.re.to_f64().unwrap_or(f64::NAN);
                let im = v.im.to_f64().unwrap_or(f64::NAN);
                re.hypot(im)
            }
            other => other.to_f64().abs(),
        }
    }

    /// `ln |x|`, robust for values far outside the `f64` range.
    /// Returns `-inf` for zero.
    pub fn ln_abs(&self) -> f64 {
        match self {
            Scalar::Int(v) => ln_abs_bigint(v),
            Scalar::Rat(v) => ln_abs_bigint(v.numer()) - ln_abs_bigint(v.denom()),
            Scalar::Gauss(v) => 0.5 * ln_abs_bigint(&v.norm_sqr()),
            Scalar::Float(v) => v.abs().ln(),
        }
    }

    /// Exact rational value, if the scalar is real and exact (floats convert
    /// exactly since every finite `f64` is a dyadic rational).
    pub fn to_rational(&self) -> Option<BigRational> {
        match self {
            Scalar::Int(v) => Some(BigRational::from_integer(v.clone())),
            Scalar::Rat(v) => Some(v.clone()),
            Scalar::Gauss(v) if v.im.is_zero() => Some(BigRational::from_integer(v.re.clone())),
            Scalar::Gauss(_) => None,
            Scalar::Float(v) => BigRational::from_float(*v),
        }
    }

    /// Compare the modulus against one, exactly in exact regimes.
    pub fn cmp_abs_one(&self) -> Ordering {
        match self {
            Scalar::Int(v) => v.abs().cmp(&BigInt::one()),
            Scalar::Rat(v) => v.abs().cmp(&BigRational::one()),
            Scalar::Gauss(v) => v.norm_sqr().cmp(&BigInt::one()),
            Scalar::Float(v) => v.abs().partial_cmp(&1.0).unwrap_or(Ordering::Greater),
        }
    }

    /// Re-express the value in `regime`, failing if that loses information.
    pub fn coerce(&self, regime: Regime) -> Result<Scalar> {
        let fail = || Error::NotInRegime { value: self.to_string(), regime };
        Ok(match (self, regime) {
            (s, r) if s.regime() == r => s.clone(),
            (Scalar::Int(v), Regime::Rational) => Scalar::Rat(BigRational::from_integer(v.clone())),
            (Scalar::Int(v), Regime::GaussianInteger) => {
                Scalar::Gauss(GaussInt { re: v.clone(), im: BigInt::zero() })
            }
            (Scalar::Int(_) | Scalar::Rat(_), Regime::Float) => Scalar::Float(self.to_f64()),
            (Scalar::Rat(v), Regime::Integer) if v.is_integer() => Scalar::Int(v.to_integer()),
            (Scalar::Rat(v), Regime::GaussianInteger) if v.is_integer() => {
                Scalar::Gauss(GaussInt { re: v.to_integer(), im: BigInt::zero() })
            }
            (Scalar::Gauss(v), Regime::Integer) if v.im.is_zero() => Scalar::Int(v.re.clone()),
            (Scalar::Gauss(v), Regime::Rational) if v.im.is_zero() => {
                Scalar::Rat(BigRational::from_integer(v.re.clone()))
            }
            (Scalar::Gauss(v), Regime::Float) if v.im.is_zero() => {
                Scalar::Float(v.re.to_f64().unwrap_or(f64::NAN))
            }
            (Scalar::Float(v), r) if v.is_finite() => {
                let q = BigRational::from_float(*v).ok_or_else(fail)?;
                Scalar::Rat(q).coerce(r)?
            }
            _ => return Err(fail()),
        })
    }

    fn promote_pair(&self, other: &Scalar) -> Result<(Scalar, Scalar)> {
        let r = self.regime().join(other.regime())?;
        Ok((self.coerce(r)?, other.coerce(r)?))
    }

    pub fn checked_add(&self, other: &Scalar) -> Result<Scalar> {
        if self.regime() == other.regime() {
            return Ok(same_add(self, other));
        }
        let (a, b) = self.promote_pair(other)?;
        Ok(same_add(&a, &b))
    }

    pub fn checked_sub(&self, other: &Scalar) -> Result<Scalar> {
        self.checked_add(&-other)
    }

    pub fn checked_mul(&self, other: &Scalar) -> Result<Scalar> {
        if self.regime() == other.regime() {
            return Ok(same_mul(self, other));
        }
        let (a, b) = self.promote_pair(other)?;
        Ok(same_mul(&a, &b))
    }

    /// Exact decimal / fraction string used in CSV and JSON exports.
    pub fn to_exact_string(&self) -> String {
        self.to_string()
    }
}

fn same_add(a: &Scalar, b: &Scalar) -> Scalar {
    match (a, b) {
        (Scalar::Int(x), Scalar::Int(y)) => Scalar::Int(x + y),
        (Scalar::Rat(x), Scalar::Rat(y)) => Scalar::Rat(x + y),
        (Scalar::Gauss(x), Scalar::Gauss(y)) => {
            Scalar::Gauss(GaussInt { re: &x.re + &y.re, im: &x.im + &y.im })
        }
        (Scalar::Float(x), Scalar::Float(y)) => Scalar::Float(x + y),
        _ => unreachable!("operands promoted to a common regime"),
    }
}

fn same_mul(a: &Scalar, b: &Scalar) -> Scalar {
    match (a, b) {
        (Scalar::Int(x), Scalar::Int(y)) => Scalar::Int(x * y),
        (Scalar::Rat(x), Scalar::Rat(y)) => Scalar::Rat(x * y),
        (Scalar::Gauss(x), Scalar::Gauss(y)) => Scalar::Gauss(GaussInt {
            re: &x.re * &y.re - &x.im * &y.im,
            im: &x.re * &y.im + &x.im * &y.re,
        }),
        (Scalar::Float(x), Scalar::Float(y)) => Scalar::Float(x * y),
        _ => unreachable!("operands promoted to a common regime"),
    }
}

// Operator sugar. Callers are expected to have joined regimes already; mixing
// the Gaussian branch with rationals or floats panics here.
impl Add for &Scalar {
    type Output = Scalar;
    fn add(self, rhs: &Scalar) -> Scalar {
        self.checked_add(rhs).expect("regimes joined before arithmetic")
    }
}

impl Sub for &Scalar {
    type Output = Scalar;
    fn sub(self, rhs: &Scalar) -> Scalar {
        self.checked_sub(rhs).expect("regimes joined before arithmetic")
    }
}

impl Mul for &Scalar {
    type Output = Scalar;
    fn mul(self, rhs: &Scalar) -> Scalar {
        self.checked_mul(rhs).expect("regimes joined before arithmetic")
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Int(x) => Scalar::Int(-x),
            Scalar::Rat(x) => Scalar::Rat(-x),
            Scalar::Gauss(x) => Scalar::Gauss(GaussInt { re: -&x.re, im: -&x.im }),
            Scalar::Float(x) => Scalar::Float(-x),
        }
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}

impl From<i64> for Scalar {
    fn from(v: i64) -> Self {
        Scalar::int(v)
    }
}

impl From<BigInt> for Scalar {
    fn from(v: BigInt) -> Self {
        Scalar::Int(v)
    }
}

impl From<BigRational> for Scalar {
    fn from(v: BigRational) -> Self {
        Scalar::Rat(v)
    }
}

impl From<f64> for Scalar {
    fn from(v: f64) -> Self {
        Scalar::Float(v)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Int(v) => write!(f, "{v}"),
            Scalar::Rat(v) => write!(f, "{}/{}", v.numer(), v.denom()),
            Scalar::Gauss(v) => write!(f, "{v}"),
            Scalar::Float(v) => write!(f, "{v:?}"),
        }
    }
}

/// Nearest-ish `f64` for a big rational, robust against numerators and
/// denominators that overflow `f64` on their own.
pub fn rational_to_f64(q: &BigRational) -> f64 {
    if let (Some(n), Some(d)) = (q.numer().to_f64(), q.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    let nb = q.numer().bits() as i64;
    let db = q.denom().bits() as i64;
    let shift = nb - db - 60;
    let scaled = if shift >= 0 {
        q.numer() / (q.denom() << shift as usize)
    } else {
        (q.numer() << (-shift) as usize) / q.denom()
    };
    scaled.to_f64().unwrap_or(f64::NAN) * 2f64.powi(shift as i32)
}

fn ln_abs_bigint(v: &BigInt) -> f64 {
    if v.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = v.bits();
    if bits < 1000 {
        return v.abs().to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (v.abs() >> shift as usize).to_f64().unwrap_or(f64::NAN);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Parse `"p/q"` or `"p"` into an exact scalar.
pub fn parse_exact(s: &str) -> Result<Scalar> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not an exact scalar: {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(Scalar::Rat(BigRational::new(n, d)))
        }
        None => Ok(Scalar::Int(s.parse().map_err(|_| bad())?)),
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Scalar::Int(v) => match v.to_i64() {
                Some(small) => ser.serialize_i64(small),
                None => ser.serialize_str(&v.to_string()),
            },
            Scalar::Rat(_) => ser.serialize_str(&self.to_string()),
            Scalar::Gauss(g) => {
                let re = Scalar::Int(g.re.clone());
                let im = Scalar::Int(g.im.clone());
                (re, im).serialize(ser)
            }
            Scalar::Float(v) => {
                if !v.is_finite() {
                    return Err(serde::ser::Error::custom("non-finite float"));
                }
                ser.serialize_f64(*v)
            }
        }
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let value = serde_json::Value::deserialize(de)?;
        scalar_from_json(&value).map_err(D::Error::custom)
    }
}

fn scalar_from_json(value: &serde_json::Value) -> Result<Scalar> {
    use serde_json::Value;
    match value {
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(Scalar::int(i))
            } else if let Some(u) = n.as_u64() {
                Ok(Scalar::Int(BigInt::from(u)))
            } else {
                Ok(Scalar::Float(n.as_f64().unwrap_or(f64::NAN)))
            }
        }
        Value::String(s) => parse_exact(s),
        Value::Array(parts) if parts.len() == 2 => {
            let re = scalar_from_json(&parts[0])?.coerce(Regime::Integer)?;
            let im = scalar_from_json(&parts[1])?.coerce(Regime::Integer)?;
            match (re, im) {
                (Scalar::Int(re), Scalar::Int(im)) => Ok(Scalar::Gauss(GaussInt { re, im })),
                _ => unreachable!(),
            }
        }
        other => Err(Error::Parse(format!("not a scalar: {other}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regime_lattice() {
        use Regime::*;
        assert_eq!(Integer.join(Rational).unwrap(), Rational);
        assert_eq!(Rational.join(Float).unwrap(), Float);
        assert_eq!(Integer.join(GaussianInteger).unwrap(), GaussianInteger);
        assert!(GaussianInteger.join(Rational).is_err());
        assert!(Float.join(GaussianInteger).is_err());
    }

    #[test]
    fn promotion_is_exact() {
        let half = Scalar::ratio(1, 2);
        let two = Scalar::int(2);
        assert_eq!(&half * &two, Scalar::ratio(1, 1));
        assert_eq!((&half + &two).to_string(), "5/2");
        let i = Scalar::gauss(0, 1);
        assert_eq!(&i * &i, Scalar::gauss(-1, 0));
        assert!(i.checked_add(&half).is_err());
    }

    #[test]
    fn json_forms() {
        let doc = r#"[3, "1/2", [1, -2], 0.25, "123456789012345678901234567890"]"#;
        let v: Vec<Scalar> = serde_json::from_str(doc).unwrap();
        assert_eq!(v[0], Scalar::int(3));
        assert_eq!(v[1], Scalar::ratio(1, 2));
        assert_eq!(v[2], Scalar::gauss(1, -2));
        assert_eq!(v[3], Scalar::Float(0.25));
        assert!(matches!(v[4], Scalar::Int(_)));
        let back = serde_json::to_string(&v).unwrap();
        assert_eq!(back, r#"[3,"1/2",[1,-2],0.25,"123456789012345678901234567890"]"#);
    }

    #[test]
    fn coercion_rejects_lossy() {
        assert!(Scalar::ratio(1, 2).coerce(Regime::Integer).is_err());
        assert_eq!(Scalar::Float(0.5).coerce(Regime::Rational).unwrap(), Scalar::ratio(1, 2));
        assert!(Scalar::gauss(1, 1).coerce(Regime::Float).is_err());
    }

    #[test]
    fn huge_rational_to_float() {
        let big = BigInt::from(3) << 2000usize;
        let q = BigRational::new(big.clone() + 1, big);
        assert!((rational_to_f64(&q) - 1.0).abs() < 1e-15);
    }
}
