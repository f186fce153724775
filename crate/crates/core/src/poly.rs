//! Dense univariate polynomials over `Q` and exact real-root isolation by
//! Sturm sequences.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::scalar::{rational_to_f64, Scalar};

/// Coefficients are stored low degree first; the zero polynomial has no
/// coefficients and the leading coefficient is never zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Poly {
    coeffs: Vec<BigRational>,
}

fn q(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

impl Poly {
    pub fn new(mut coeffs: Vec<BigRational>) -> Poly {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn from_i64(coeffs: &[i64]) -> Poly {
        Poly::new(coeffs.iter().map(|&c| q(c)).collect())
    }

    pub fn zero() -> Poly {
        Poly { coeffs: Vec::new() }
    }

    pub fn constant(c: BigRational) -> Poly {
        Poly::new(vec![c])
    }

    /// The polynomial `z`.
    pub fn identity() -> Poly {
        Poly::from_i64(&[0, 1])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn leading(&self) -> Option<&BigRational> {
        self.coeffs.last()
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + rational_to_f64(c))
    }

    pub fn sign_at(&self, x: &BigRational) -> Ordering {
        self.eval(x).cmp(&BigRational::zero())
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let zero = BigRational::zero();
        Poly::new(
            (0..n)
                .map(|i| self.coeffs.get(i).unwrap_or(&zero) + other.coeffs.get(i).unwrap_or(&zero))
                .collect(),
        )
    }

    pub fn neg(&self) -> Poly {
        Poly { coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    pub fn scale(&self, c: &BigRational) -> Poly {
        Poly::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * q(i as i64))
                .collect(),
        )
    }

    /// Euclidean division; panics on a zero divisor.
    pub fn div_rem(&self, divisor: &Poly) -> (Poly, Poly) {
        let dd = divisor.degree().expect("division by the zero polynomial");
        let lead = divisor.leading().unwrap().clone();
        let mut rem = self.coeffs.clone();
        let mut quot = vec![BigRational::zero(); self.coeffs.len().saturating_sub(dd).max(1)];
        while rem.len() > dd && !rem.is_empty() {
            let shift = rem.len() - 1 - dd;
            let factor = rem.last().unwrap() / &lead;
            for (i, c) in divisor.coeffs.iter().enumerate() {
                rem[shift + i] -= &factor * c;
            }
            quot[shift] = factor;
            rem.pop();
            while rem.last().is_some_and(Zero::is_zero) {
                rem.pop();
            }
        }
        (Poly::new(quot), Poly::new(rem))
    }

    /// Divide by `|leading coefficient|`, preserving signs everywhere.
    pub fn normalized_abs(&self) -> Poly {
        match self.leading() {
            Some(l) => self.scale(&(BigRational::one() / l.abs())),
            None => Poly::zero(),
        }
    }

    pub fn monic(&self) -> Poly {
        match self.leading() {
            Some(l) => self.scale(&(BigRational::one() / l)),
            None => Poly::zero(),
        }
    }

    pub fn gcd(&self, other: &Poly) -> Poly {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.div_rem(&b).1;
            a = b;
            b = r.normalized_abs();
        }
        a.monic()
    }

    /// `self / gcd(self, self')`: same distinct roots, all simple.
    pub fn squarefree(&self) -> Poly {
        if self.degree().unwrap_or(0) == 0 {
            return self.clone();
        }
        let g = self.gcd(&self.derivative());
        self.div_rem(&g).0.normalized_abs()
    }

    /// A power of two strictly exceeding the modulus of every complex root
    /// (Cauchy bound `1 + max |a_i / a_n|`).
    pub fn root_bound(&self) -> BigRational {
        let lead = self.leading().expect("nonzero polynomial").abs();
        let max = self.coeffs[..self.coeffs.len() - 1]
            .iter()
            .map(|c| c.abs() / &lead)
            .max()
            .unwrap_or_else(BigRational::zero);
        let cauchy = max + BigRational::one();
        let mut b = BigRational::one();
        while b <= cauchy {
            b *= q(2);
        }
        b
    }

    pub fn to_scalars(&self) -> Vec<Scalar> {
        self.coeffs.iter().cloned().map(Scalar::Rat).collect()
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() { "-" } else { "+" };
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let a = c.abs();
            let coef = if a.is_integer() { a.numer().to_string() } else { format!("({a})") };
            match i {
                0 => write!(f, "{coef}")?,
                _ => {
                    if !a.is_one() {
                        write!(f, "{coef}")?;
                    }
                    if i == 1 {
                        write!(f, "z")?
                    } else {
                        write!(f, "z^{i}")?
                    }
                }
            }
        }
        Ok(())
    }
}

impl Serialize for Poly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_scalars().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Poly {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let scalars = Vec::<Scalar>::deserialize(d)?;
        let coeffs = scalars
            .iter()
            .map(|s| s.to_rational().ok_or_else(|| D::Error::custom("non-real coefficient")))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Poly::new(coeffs))
    }
}

/// A real root enclosed in `(lo, hi]`, or known exactly when `lo == hi`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootInterval {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl RootInterval {
    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> BigRational {
        (&self.lo + &self.hi) / q(2)
    }

    pub fn midpoint_f64(&self) -> f64 {
        rational_to_f64(&self.midpoint())
    }

    pub fn lo_f64(&self) -> f64 {
        rational_to_f64(&self.lo)
    }

    pub fn hi_f64(&self) -> f64 {
        rational_to_f64(&self.hi)
    }
}

/// Sturm sequence of a square-free polynomial.
#[derive(Debug, Clone)]
pub struct SturmChain {
    chain: Vec<Poly>,
}

impl SturmChain {
    pub fn new(f: &Poly) -> SturmChain {
        let f = f.squarefree();
        let mut chain = vec![f.clone()];
        if f.degree().unwrap_or(0) == 0 {
            return SturmChain { chain };
        }
        chain.push(f.derivative().normalized_abs());
        loop {
            let n = chain.len();
            let r = chain[n - 2].div_rem(&chain[n - 1]).1;
            if r.is_zero() {
                break;
            }
            chain.push(r.neg().normalized_abs());
        }
        SturmChain { chain }
    }

    /// The square-free polynomial whose roots this chain counts.
    pub fn base(&self) -> &Poly {
        &self.chain[0]
    }

    /// Sign variations at `x`, zeros skipped.
    pub fn variations(&self, x: &BigRational) -> usize {
        let mut count = 0;
        let mut last = Ordering::Equal;
        for p in &self.chain {
            let s = p.sign_at(x);
            if s == Ordering::Equal {
                continue;
            }
            if last != Ordering::Equal && s != last {
                count += 1;
            }
            last = s;
        }
        count
    }

    /// Number of distinct real roots in `(a, b]`.
    pub fn count(&self, a: &BigRational, b: &BigRational) -> usize {
        if self.chain[0].is_zero() || a >= b {
            return 0;
        }
        self.variations(a).saturating_sub(self.variations(b))
    }

    /// Isolate every distinct real root in `(a, b]`, refining each enclosure
    /// until its width is at most `width`.
    pub fn isolate_in(&self, a: &BigRational, b: &BigRational, width: &BigRational) -> Vec<RootInterval> {
        let mut out = Vec::new();
        let mut stack = vec![(a.clone(), b.clone())];
        while let Some((lo, hi)) = stack.pop() {
            match self.count(&lo, &hi) {
                0 => {}
                1 => out.push(self.refine(RootInterval { lo, hi }, width)),
                _ => {
                    let mid = (&lo + &hi) / q(2);
                    stack.push((mid.clone(), hi));
                    stack.push((lo, mid));
                }
            }
        }
        out.sort_by(|x, y| x.lo.cmp(&y.lo));
        out
    }

    /// Every distinct real root.
    pub fn isolate_all(&self, width: &BigRational) -> Vec<RootInterval> {
        let f = &self.chain[0];
        if f.degree().unwrap_or(0) == 0 {
            return Vec::new();
        }
        let b = f.root_bound();
        self.isolate_in(&-b.clone(), &b, width)
    }

    /// Shrink an enclosure `(lo, hi]` holding exactly one simple root.
    pub fn refine(&self, mut iv: RootInterval, width: &BigRational) -> RootInterval {
        let f = &self.chain[0];
        if iv.is_exact() {
            return iv;
        }
        let s_hi = f.sign_at(&iv.hi);
        if s_hi == Ordering::Equal {
            return RootInterval { lo: iv.hi.clone(), hi: iv.hi };
        }
        while iv.width() > *width {
            let mid = iv.midpoint();
            let s_mid = f.sign_at(&mid);
            match s_mid {
                Ordering::Equal => return RootInterval { lo: mid.clone(), hi: mid },
                s if s == s_hi => iv.hi = mid,
                _ => iv.lo = mid,
            }
        }
        iv
    }
}

/// Dyadic width `2^-k <= w`.
pub fn dyadic_width(w: f64) -> BigRational {
    let mut width = BigRational::one();
    let two = q(2);
    let mut k = 0;
    while rational_to_f64(&width) > w && k < 2000 {
        width /= &two;
        k += 1;
    }
    width
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn arithmetic() {
        let a = Poly::from_i64(&[1, 1]); // 1 + z
        let b = Poly::from_i64(&[-1, 1]); // z - 1
        assert_eq!(a.mul(&b), Poly::from_i64(&[-1, 0, 1]));
        let (qq, r) = Poly::from_i64(&[-1, 0, 1]).div_rem(&b);
        assert_eq!(qq, a);
        assert!(r.is_zero());
        assert_eq!(Poly::from_i64(&[5, 3, 2]).derivative(), Poly::from_i64(&[3, 4]));
        assert_eq!(a.to_string(), "z + 1");
    }

    #[test]
    fn gcd_and_squarefree() {
        // (z - 1)^2 (z + 2)
        let f = Poly::from_i64(&[2, -3, 0, 1]);
        assert_eq!(f.squarefree().monic(), Poly::from_i64(&[-2, 1, 1]));
        let g = f.gcd(&Poly::from_i64(&[-1, 1]));
        assert_eq!(g, Poly::from_i64(&[-1, 1]));
    }

    #[test]
    fn isolates_sqrt_two() {
        let f = Poly::from_i64(&[-2, 0, 1]);
        let chain = SturmChain::new(&f);
        let roots = chain.isolate_all(&dyadic_width(1e-12));
        assert_eq!(roots.len(), 2);
        assert!((roots[0].midpoint_f64() + 2f64.sqrt()).abs() < 1e-12);
        assert!((roots[1].midpoint_f64() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn exact_dyadic_roots_are_hit() {
        // (z - 2)(z + 2)(z - 1/2)
        let f = Poly::from_i64(&[-4, 0, 1]).mul(&Poly::new(vec![q(-1) / q(2), q(1)]));
        let roots = SturmChain::new(&f).isolate_all(&dyadic_width(1e-12));
        assert_eq!(roots.len(), 3);
        assert!(roots.iter().all(RootInterval::is_exact));
        assert_eq!(roots[2].lo, q(2));
    }

    #[test]
    fn multiple_roots_counted_once() {
        // (z - 1)^3 (z - 3)^2
        let f = Poly::from_i64(&[-1, 1]).mul(&Poly::from_i64(&[-1, 1]))
            .mul(&Poly::from_i64(&[-1, 1]))
            .mul(&Poly::from_i64(&[-3, 1]).mul(&Poly::from_i64(&[-3, 1])));
        let roots = SturmChain::new(&f).isolate_all(&dyadic_width(1e-9));
        assert_eq!(roots.len(), 2);
    }

    proptest! {
        #[test]
        fn isolation_matches_constructed_roots(mut roots in prop::collection::btree_set(-40i64..40, 1..7)) {
            // roots r/7 (distinct), product of (z - r/7)
            let roots: Vec<i64> = std::mem::take(&mut roots).into_iter().collect();
            let mut f = Poly::constant(q(1));
            for &r in &roots {
                f = f.mul(&Poly::new(vec![-q(r) / q(7), q(1)]));
            }
            let found = SturmChain::new(&f).isolate_all(&dyadic_width(1e-12));
            prop_assert_eq!(found.len(), roots.len());
            for (iv, &r) in found.iter().zip(&roots) {
                let exact = q(r) / q(7);
                prop_assert!(iv.lo <= exact && exact <= iv.hi);
                prop_assert!(iv.width() <= dyadic_width(1e-12));
            }
        }
    }
}
