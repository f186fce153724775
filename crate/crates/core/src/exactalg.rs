//! Exact transfer-matrix algebra.
//!
//! Solutions of `(H - zI) x = 0` satisfy the two-term recursion
//! `(x_n, x_{n+1}) = T_z(n) (x_{n-1}, x_n)` with
//! `T_z(n) = [[0, 1], [-1, z - v(n)]]`, which at `z = 0` is the classical
//! transfer matrix `[[0, 1], [-1, -v(n)]]`. Every factor has determinant one,
//! so products over integer potentials stay in `SL(2, Z)`.

use std::cmp::Ordering;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::potential::Potential;
use crate::scalar::{Regime, Scalar};

/// A 2x2 matrix over one scalar regime.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferMatrix {
    pub regime: Regime,
    pub entries: [[Scalar; 2]; 2],
}

impl TransferMatrix {
    pub fn identity(regime: Regime) -> TransferMatrix {
        let (o, z) = (Scalar::one_in(regime), Scalar::zero_in(regime));
        TransferMatrix { regime, entries: [[o.clone(), z.clone()], [z, o]] }
    }

    /// Single step `[[0, 1], [-1, z - v]]`; both arguments must already live
    /// in a common regime.
    pub fn step(v: &Scalar, z: &Scalar) -> Result<TransferMatrix> {
        let regime = v.regime().join(z.regime())?;
        let c = z.checked_sub(v)?.coerce(regime)?;
        Ok(TransferMatrix {
            regime,
            entries: [
                [Scalar::zero_in(regime), Scalar::one_in(regime)],
                [-Scalar::one_in(regime), c],
            ],
        })
    }

    pub fn from_i64(m: [[i64; 2]; 2]) -> TransferMatrix {
        TransferMatrix {
            regime: Regime::Integer,
            entries: m.map(|row| row.map(Scalar::int)),
        }
    }

    pub fn a11(&self) -> &Scalar {
        &self.entries[0][0]
    }
    pub fn a12(&self) -> &Scalar {
        &self.entries[0][1]
    }
    pub fn a21(&self) -> &Scalar {
        &self.entries[1][0]
    }
    pub fn a22(&self) -> &Scalar {
        &self.entries[1][1]
    }

    pub fn mul(&self, rhs: &TransferMatrix) -> TransferMatrix {
        let a = &self.entries;
        let b = &rhs.entries;
        let e = |i: usize, j: usize| &(&a[i][0] * &b[0][j]) + &(&a[i][1] * &b[1][j]);
        TransferMatrix {
            regime: self.regime.join(rhs.regime).expect("matrices share a regime"),
            entries: [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]],
        }
    }

    /// `T * self` for a single step with corner entry `c = z - v(n)`, without
    /// materializing `T`.
    fn push_step(&mut self, c: &Scalar) {
        let [[m11, m12], [m21, m22]] = &self.entries;
        let n21 = &(c * m21) - m11;
        let n22 = &(c * m22) - m12;
        self.entries = [[m21.clone(), m22.clone()], [n21, n22]];
    }

    pub fn det(&self) -> Scalar {
        &(self.a11() * self.a22()) - &(self.a12() * self.a21())
    }

    pub fn trace(&self) -> Scalar {
        self.a11() + self.a22()
    }

    /// Inverse of a determinant-one matrix: `[[d, -b], [-c, a]]`.
    pub fn inverse_unimodular(&self) -> TransferMatrix {
        TransferMatrix {
            regime: self.regime,
            entries: [
                [self.a22().clone(), -self.a12()],
                [-self.a21(), self.a11().clone()],
            ],
        }
    }

    pub fn pow(&self, k: u32) -> TransferMatrix {
        (0..k).fold(TransferMatrix::identity(self.regime), |acc, _| acc.mul(self))
    }

    pub fn apply(&self, v: [&Scalar; 2]) -> [Scalar; 2] {
        [
            &(self.a11() * v[0]) + &(self.a12() * v[1]),
            &(self.a21() * v[0]) + &(self.a22() * v[1]),
        ]
    }

    pub fn to_f64(&self) -> [[f64; 2]; 2] {
        [
            [self.a11().to_f64(), self.a12().to_f64()],
            [self.a21().to_f64(), self.a22().to_f64()],
        ]
    }
}

fn regime_for(p: &Potential, z: &Scalar) -> Result<Regime> {
    p.regime().join(z.regime())
}

/// `T_z(r) ... T_z(l)`, exact in the join of the potential's and `z`'s regimes.
pub fn transfer_product(p: &Potential, z: &Scalar, l: i64, r: i64) -> Result<TransferMatrix> {
    if l > r {
        return Err(Error::InvalidRange { l, r });
    }
    let regime = regime_for(p, z)?;
    let z = z.coerce(regime)?;
    let mut m = TransferMatrix::identity(regime);
    for n in l..=r {
        let c = z.checked_sub(&p.eval(n).coerce(regime)?)?;
        m.push_step(&c);
    }
    Ok(m)
}

/// Classification of an orbit's magnitude trend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Growth {
    Growing,
    Decaying,
    Bounded,
    /// Too few nonzero samples to fit a slope.
    Undetermined,
}

/// Least-squares slope threshold separating growth/decay from bounded orbits.
pub const GROWTH_SLOPE_THRESHOLD: f64 = 1e-3;

/// Solution of `(H - zI) x = 0` on `n >= -1` with Dirichlet data
/// `x_{-1} = 0`, `x_0 = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirichletOrbit {
    pub z: Scalar,
    /// Index of `values[0]`, always `-1`.
    pub start: i64,
    pub values: Vec<Scalar>,
    /// All values lie in the ring generated by the potential's values
    /// (integers, or Gaussian integers); `None` for float orbits.
    pub in_ring: Option<bool>,
    pub growth: Growth,
    /// Fitted slope of `ln |x_n|` over the trailing quarter of the orbit.
    pub log_slope: Option<f64>,
    /// Float orbits only: some magnitude exceeded `1e300`.
    pub overflow_warning: bool,
}

impl DirichletOrbit {
    /// `x_n`.
    pub fn value(&self, n: i64) -> &Scalar {
        &self.values[(n - self.start) as usize]
    }

    /// Consecutive pairs `(x_n, x_{n+1})` are never both zero.
    pub fn pairs_nonvanishing(&self) -> bool {
        self.values.windows(2).all(|w| !(w[0].is_zero() && w[1].is_zero()))
    }

    /// CSV with columns `n,x_n`; exact regimes print exact values.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,x_n\n");
        for (i, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{},{}", self.start + i as i64, v);
        }
        out
    }
}

/// Least-squares slope of `ln |x_n|` against `n` over the trailing quarter,
/// skipping exact zeros.
fn fit_log_slope(values: &[Scalar], start: i64) -> Option<f64> {
    let tail_from = values.len() - values.len() / 4;
    let pts: Vec<(f64, f64)> = values
        .iter()
        .enumerate()
        .skip(tail_from.min(values.len().saturating_sub(2)))
        .filter(|(_, v)| !v.is_zero())
        .map(|(i, v)| ((start + i as i64) as f64, v.ln_abs()))
        .filter(|(_, y)| y.is_finite())
        .collect();
    least_squares_slope(&pts)
}

pub(crate) fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

/// `x_{-1} = 0`, `x_0 = 1`, `x_{n+1} = (z - v(n)) x_n - x_{n-1}` for
/// `0 <= n < len`.
pub fn dirichlet_orbit(p: &Potential, z: &Scalar, len: usize) -> Result<DirichletOrbit> {
    let regime = regime_for(p, z)?;
    let zc = z.coerce(regime)?;
    let mut values = Vec::with_capacity(len + 2);
    values.push(Scalar::zero_in(regime));
    values.push(Scalar::one_in(regime));
    let mut overflow_warning = false;
    for n in 0..len as i64 {
        let c = zc.checked_sub(&p.eval(n).coerce(regime)?)?;
        let k = values.len();
        let next = &(&c * &values[k - 1]) - &values[k - 2];
        if let Scalar::Float(f) = next {
            overflow_warning |= !(f.abs() <= 1e300);
        }
        values.push(next);
    }
    let in_ring = match regime {
        Regime::Float => None,
        Regime::Integer | Regime::GaussianInteger => Some(true),
        Regime::Rational => Some(values.iter().all(Scalar::is_integer)),
    };
    let log_slope = fit_log_slope(&values, -1);
    let growth = match log_slope {
        None => Growth::Undetermined,
        Some(s) if s > GROWTH_SLOPE_THRESHOLD => Growth::Growing,
        Some(s) if s < -GROWTH_SLOPE_THRESHOLD => Growth::Decaying,
        Some(_) => Growth::Bounded,
    };
    Ok(DirichletOrbit { z: zc, start: -1, values, in_ring, growth, log_slope, overflow_warning })
}

/// Leading principal minors `det (H - zI)_{l..n}` for `n = l..=r`.
pub fn section_determinants(p: &Potential, z: &Scalar, l: i64, r: i64) -> Result<Vec<Scalar>> {
    if l > r {
        return Err(Error::InvalidRange { l, r });
    }
    let regime = regime_for(p, z)?;
    let zc = z.coerce(regime)?;
    let mut prev2 = Scalar::zero_in(regime);
    let mut prev = Scalar::one_in(regime);
    let mut out = Vec::with_capacity((r - l + 1) as usize);
    for n in l..=r {
        let d = p.eval(n).coerce(regime)?.checked_sub(&zc)?;
        let next = &(&d * &prev) - &prev2;
        prev2 = std::mem::replace(&mut prev, next.clone());
        out.push(next);
    }
    Ok(out)
}

/// `det (H - zI)_{l..r}` by the three-term continuant recursion
/// `d_n = (v(n) - z) d_{n-1} - d_{n-2}`, `d_{l-1} = 1`, `d_{l-2} = 0`.
pub fn finite_section_determinant(p: &Potential, z: &Scalar, l: i64, r: i64) -> Result<Scalar> {
    Ok(section_determinants(p, z, l, r)?.pop().expect("nonempty section"))
}

/// 2x2 matrix of rational polynomials in the spectral parameter `z`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolyMatrix {
    pub m11: Poly,
    pub m12: Poly,
    pub m21: Poly,
    pub m22: Poly,
}

impl PolyMatrix {
    pub fn eval(&self, z: &BigRational) -> [[BigRational; 2]; 2] {
        [[self.m11.eval(z), self.m12.eval(z)], [self.m21.eval(z), self.m22.eval(z)]]
    }
}

/// Floquet discriminant `Delta(z) = tr (T_z(p-1) ... T_z(0))` of a periodic
/// potential, with the full monodromy kept for Dirichlet computations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Discriminant {
    pub period: usize,
    pub coefficients: Poly,
    pub monodromy: PolyMatrix,
}

impl Discriminant {
    pub fn eval(&self, z: &BigRational) -> BigRational {
        self.coefficients.eval(z)
    }

    pub fn eval_f64(&self, z: f64) -> f64 {
        self.coefficients.eval_f64(z)
    }

    /// `Delta - c` for a rational constant `c`.
    pub fn shifted(&self, c: i64) -> Poly {
        self.coefficients.sub(&Poly::from_i64(&[c]))
    }

    /// Exact sign of `|Delta(z)| - 2`: `Less` inside a band interior,
    /// `Equal` on a band edge, `Greater` inside a gap.
    pub fn band_test(&self, z: &BigRational) -> Ordering {
        self.eval(z).abs().cmp(&BigRational::from_integer(BigInt::from(2)))
    }
}

fn exact_real(s: &Scalar) -> Result<BigRational> {
    match s {
        Scalar::Int(_) | Scalar::Rat(_) => Ok(s.to_rational().unwrap()),
        other => Err(Error::NotInRegime { value: other.to_string(), regime: Regime::Rational }),
    }
}

/// Exact discriminant polynomial of a periodic integer or rational potential.
pub fn discriminant(p: &Potential) -> Result<Discriminant> {
    let values = p.period_values()?;
    let mut m = PolyMatrix {
        m11: Poly::from_i64(&[1]),
        m12: Poly::zero(),
        m21: Poly::zero(),
        m22: Poly::from_i64(&[1]),
    };
    for v in &values {
        let c = Poly::identity().sub(&Poly::constant(exact_real(v)?));
        m = PolyMatrix {
            m11: m.m21.clone(),
            m12: m.m22.clone(),
            m21: c.mul(&m.m21).sub(&m.m11),
            m22: c.mul(&m.m22).sub(&m.m12),
        };
    }
    Ok(Discriminant { period: values.len(), coefficients: m.m11.add(&m.m22), monodromy: m })
}

/// Monodromy `M(z) = T_z(p-1) ... T_z(0)` of a periodic potential.
pub fn monodromy(p: &Potential, z: &Scalar) -> Result<TransferMatrix> {
    let period = p.period().ok_or(Error::NotPeriodic)?;
    transfer_product(p, z, 0, period as i64 - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonodromyVerdict {
    /// `|Delta(z)| <= 2`: `z` lies in the spectrum.
    NotGap,
    /// Gap point with `M12(z) != 0`: the Dirichlet vector `(0, 1)` is not an
    /// eigenvector of `M(z)`.
    GapNoDirichlet,
    /// Gap point with `M12(z) = 0` but `|M22(z)| >= 1`. For integer input
    /// `det M = 1` forces `|M22| = 1`; the decay criterion fails.
    GapDirichletImpossibleInteger,
    /// Gap point with `M12(z) = 0`, `|M22(z)| < 1`: `z` is a Dirichlet
    /// eigenvalue. Never produced for integer potentials and integer `z`.
    GapDirichlet,
}

/// Outcome of the exact Dirichlet-decay test at one spectral parameter,
/// with its witness entries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonodromyCertificate {
    pub z: Scalar,
    pub verdict: MonodromyVerdict,
    pub trace: Scalar,
    pub m11: Scalar,
    pub m12: Scalar,
    pub m21: Scalar,
    pub m22: Scalar,
    pub det: Scalar,
}

impl MonodromyCertificate {
    /// `M12 = 0 => |M22| = 1`, the integrality consequence of `det M = 1`.
    pub fn integrality_holds(&self) -> bool {
        !self.m12.is_zero() || self.m22.cmp_abs_one() == Ordering::Equal
    }

    pub fn is_dirichlet(&self) -> bool {
        self.verdict == MonodromyVerdict::GapDirichlet
    }
}

/// Decide exactly whether `z` is a Dirichlet eigenvalue of the half-line
/// compression of a periodic potential: `z` must lie in a gap
/// (`|Delta(z)| > 2`) and `(0, 1)` must span the contracting eigendirection
/// of `M(z)` (`M12(z) = 0`, `|M22(z)| < 1`).
pub fn monodromy_dirichlet_test(p: &Potential, z: &Scalar) -> Result<MonodromyCertificate> {
    if !p.regime().is_exact() || p.regime() == Regime::GaussianInteger {
        return Err(Error::NotInRegime { value: format!("{:?} potential", p.regime()), regime: Regime::Rational });
    }
    exact_real(z)?;
    let m = monodromy(p, z)?;
    let trace = m.trace();
    let abs_trace = trace.to_rational().expect("exact real").abs();
    let verdict = if abs_trace <= BigRational::from_integer(BigInt::from(2)) {
        MonodromyVerdict::NotGap
    } else if !m.a12().is_zero() {
        MonodromyVerdict::GapNoDirichlet
    } else if m.a22().cmp_abs_one() == Ordering::Less {
        MonodromyVerdict::GapDirichlet
    } else {
        MonodromyVerdict::GapDirichletImpossibleInteger
    };
    Ok(MonodromyCertificate {
        z: z.coerce(m.regime)?,
        verdict,
        det: m.det(),
        m11: m.a11().clone(),
        m12: m.a12().clone(),
        m21: m.a21().clone(),
        m22: m.a22().clone(),
        trace,
    })
}

/// A counterexample found by [`integer_avoidance_sweep`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AvoidanceViolation {
    pub word: Vec<i64>,
    pub certificate: MonodromyCertificate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AvoidanceSweep {
    pub seed: u64,
    pub potentials: usize,
    pub max_period: usize,
    pub value_bound: i64,
    /// Integer gap points tested.
    pub gap_points: usize,
    /// Integer points (in or out of gaps) with `M12 = 0`.
    pub zero_m12_points: usize,
    pub violations: Vec<AvoidanceViolation>,
}

/// Draw `potentials` integer words (period `1..=max_period`, values in
/// `[-value_bound, value_bound]`) from a ChaCha8 stream seeded with `seed`
/// and run [`monodromy_dirichlet_test`] at every integer
/// `z in [min v - 3, max v + 3]`. A violation is a Dirichlet certificate at a
/// gap point or `M12 = 0` with `|M22| != 1`.
pub fn integer_avoidance_sweep(seed: u64, potentials: usize, max_period: usize, value_bound: i64) -> Result<AvoidanceSweep> {
    use rand::{Rng, SeedableRng};
    use rayon::prelude::*;

    if max_period == 0 || value_bound < 0 {
        return Err(Error::InvalidPotential("empty sweep range".into()));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let words: Vec<Vec<i64>> = (0..potentials)
        .map(|_| {
            let len = rng.random_range(1..=max_period);
            (0..len).map(|_| rng.random_range(-value_bound..=value_bound)).collect()
        })
        .collect();
    let per_word: Vec<(usize, usize, Vec<AvoidanceViolation>)> = words
        .par_iter()
        .map(|w| {
            let p = Potential::periodic_int(w);
            let (lo, hi) = (*w.iter().min().expect("nonempty"), *w.iter().max().expect("nonempty"));
            let (mut gap, mut zero, mut bad) = (0, 0, Vec::new());
            for z in lo - 3..=hi + 3 {
                let cert = monodromy_dirichlet_test(&p, &Scalar::int(z))?;
                if cert.m12.is_zero() {
                    zero += 1;
                }
                if cert.verdict != MonodromyVerdict::NotGap {
                    gap += 1;
                }
                if cert.is_dirichlet() || !cert.integrality_holds() {
                    bad.push(AvoidanceViolation { word: w.clone(), certificate: cert });
                }
            }
            Ok((gap, zero, bad))
        })
        .collect::<Result<_>>()?;
    let mut sweep = AvoidanceSweep {
        seed,
        potentials,
        max_period,
        value_bound,
        gap_points: 0,
        zero_m12_points: 0,
        violations: Vec::new(),
    };
    for (g, z, v) in per_word {
        sweep.gap_points += g;
        sweep.zero_m12_points += z;
        sweep.violations.extend(v);
    }
    Ok(sweep)
}

/// Exact eigen-check of a rational vector: is `u` an eigenvector of `m`, and
/// if so with which eigenvalue?
pub fn rational_eigenvalue_of(m: &TransferMatrix, u: [&BigRational; 2]) -> Option<BigRational> {
    let e = m.to_rational()?;
    let mu = [&e[0][0] * u[0] + &e[0][1] * u[1], &e[1][0] * u[0] + &e[1][1] * u[1]];
    let cross = u[0] * &mu[1] - u[1] * &mu[0];
    if !cross.is_zero() {
        return None;
    }
    if !u[0].is_zero() {
        Some(&mu[0] / u[0])
    } else if !u[1].is_zero() {
        Some(&mu[1] / u[1])
    } else {
        None
    }
}

impl TransferMatrix {
    pub fn to_rational(&self) -> Option<[[BigRational; 2]; 2]> {
        let r = |s: &Scalar| match s {
            Scalar::Int(_) | Scalar::Rat(_) => s.to_rational(),
            _ => None,
        };
        Some([
            [r(self.a11())?, r(self.a12())?],
            [r(self.a21())?, r(self.a22())?],
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;
    use crate::potential::PotentialKind;
    use proptest::prelude::*;

    fn example_1() -> Potential {
        Potential::periodic(
            vec![Scalar::ratio(1, 2), Scalar::int(2), Scalar::ratio(1, 2)],
            Regime::Rational,
        )
        .unwrap()
    }

    fn bits(s: &str) -> Vec<Scalar> {
        s.bytes().map(|b| Scalar::int((b - b'0') as i64)).collect()
    }

    /// Plain matrix product of explicitly built factors, for cross-checks.
    fn naive_product(p: &Potential, z: &Scalar, l: i64, r: i64) -> TransferMatrix {
        let mut m = TransferMatrix::identity(p.regime().join(z.regime()).unwrap());
        for n in l..=r {
            m = TransferMatrix::step(&p.eval(n), z).unwrap().mul(&m);
        }
        m
    }

    #[test]
    fn single_free_step() {
        let p = Potential::periodic_int(&[0]);
        let m = transfer_product(&p, &Scalar::int(0), 0, 0).unwrap();
        assert_eq!(m, TransferMatrix::from_i64([[0, 1], [-1, 0]]));
    }

    #[test]
    fn example_2_right_word_product() {
        let p = Potential::periodic(bits("10101"), Regime::Integer).unwrap();
        let m = transfer_product(&p, &Scalar::int(0), 0, 4).unwrap();
        assert_eq!(m, TransferMatrix::from_i64([[0, 1], [-1, -3]]));
        assert_eq!(m.trace(), Scalar::int(-3));
        assert_eq!(m, naive_product(&p, &Scalar::int(0), 0, 4));
    }

    #[test]
    fn example_1_product() {
        let m = transfer_product(&example_1(), &Scalar::int(0), 0, 2).unwrap();
        assert_eq!(m.a11(), &Scalar::ratio(2, 1));
        assert!(m.a12().is_zero() && m.a21().is_zero());
        assert_eq!(m.a22(), &Scalar::ratio(1, 2));
        assert_eq!(m.trace(), Scalar::ratio(5, 2));
    }

    #[test]
    fn invalid_inputs() {
        let p = Potential::periodic_int(&[1]);
        assert!(transfer_product(&p, &Scalar::int(0), 3, 2).is_err());
        let g = Potential::periodic(vec![Scalar::gauss(1, 1)], Regime::GaussianInteger).unwrap();
        assert!(transfer_product(&g, &Scalar::ratio(1, 2), 0, 1).is_err());
        let m = transfer_product(&g, &Scalar::int(0), 0, 5).unwrap();
        assert_eq!(m.det(), Scalar::gauss(1, 0));
        assert!(discriminant(&Potential::fibonacci()).is_err());
    }

    #[test]
    fn free_orbit() {
        let o = dirichlet_orbit(&Potential::periodic_int(&[0]), &Scalar::int(0), 6).unwrap();
        let vals: Vec<_> = o.values.iter().map(|v| v.to_string()).collect();
        assert_eq!(vals, ["0", "1", "0", "-1", "0", "1", "0", "-1"]);
        assert_eq!(o.in_ring, Some(true));
        assert!(o.pairs_nonvanishing());
    }

    #[test]
    fn integer_orbit_grows() {
        let o = dirichlet_orbit(&Potential::periodic_int(&[4]), &Scalar::int(0), 40).unwrap();
        assert_eq!(o.in_ring, Some(true));
        assert!(o.values.iter().all(|v| matches!(v, Scalar::Int(_))));
        for n in 2..=40 {
            assert!(o.value(n).abs_f64() > o.value(n - 1).abs_f64(), "n = {n}");
        }
        assert_eq!(o.growth, Growth::Growing);
        // growth rate ln(2 + sqrt 3) per site
        let rate = (2.0 + 3f64.sqrt()).ln();
        assert!((o.log_slope.unwrap() - rate).abs() < 1e-3);
    }

    #[test]
    fn example_1_orbit_decays() {
        let o = dirichlet_orbit(&example_1(), &Scalar::int(0), 60).unwrap();
        for k in 0..=20i64 {
            let expected = Scalar::Rat(BigRational::new(1.into(), BigInt::from(2).pow(k as u32)));
            assert_eq!(o.value(3 * k), &expected);
        }
        assert_eq!(o.in_ring, Some(false));
        assert_eq!(o.growth, Growth::Decaying);
        let csv = o.to_csv();
        assert!(csv.starts_with("n,x_n\n-1,0/1\n0,1/1\n1,-1/2\n"));
    }

    #[test]
    fn float_orbit_overflow_flag() {
        let p = Potential::periodic(vec![Scalar::Float(40.0)], Regime::Float).unwrap();
        let o = dirichlet_orbit(&p, &Scalar::Float(0.0), 400).unwrap();
        assert!(o.overflow_warning);
        assert_eq!(o.in_ring, None);
    }

    #[test]
    fn section_determinant_examples() {
        let free = Potential::periodic_int(&[0]);
        let four = Potential::periodic_int(&[4]);
        let z = Scalar::int(0);
        assert!(finite_section_determinant(&free, &z, 0, 2).unwrap().is_zero());
        assert_eq!(finite_section_determinant(&free, &z, 3, 6).unwrap(), Scalar::int(1));
        assert_eq!(finite_section_determinant(&free, &z, 0, 1).unwrap(), Scalar::int(-1));
        assert_eq!(finite_section_determinant(&four, &z, 0, 0).unwrap(), Scalar::int(4));
        assert_eq!(finite_section_determinant(&four, &z, 0, 1).unwrap(), Scalar::int(15));
        assert_eq!(finite_section_determinant(&four, &z, -7, -5).unwrap(), Scalar::int(56));
    }

    #[test]
    fn discriminant_examples() {
        let d0 = discriminant(&Potential::periodic_int(&[0])).unwrap();
        assert_eq!(d0.coefficients, Poly::from_i64(&[0, 1]));
        let d4 = discriminant(&Potential::periodic_int(&[4])).unwrap();
        assert_eq!(d4.coefficients, Poly::from_i64(&[-4, 1]));
        let d1 = discriminant(&example_1()).unwrap();
        assert_eq!(d1.period, 3);
        assert_eq!(d1.coefficients.degree(), Some(3));
        assert_eq!(d1.eval(&BigRational::zero()), BigRational::new(5.into(), 2.into()));
    }

    #[test]
    fn monodromy_test_examples() {
        let c = monodromy_dirichlet_test(&Potential::periodic_int(&[4]), &Scalar::int(0)).unwrap();
        assert_eq!(c.verdict, MonodromyVerdict::GapNoDirichlet);
        assert_eq!(c.trace, Scalar::int(-4));
        assert_eq!(c.m12, Scalar::int(1));
        assert_eq!(c.det, Scalar::int(1));
        let c = monodromy_dirichlet_test(&Potential::periodic_int(&[0]), &Scalar::int(0)).unwrap();
        assert_eq!(c.verdict, MonodromyVerdict::NotGap);
        let c = monodromy_dirichlet_test(&example_1(), &Scalar::int(0)).unwrap();
        assert_eq!(c.verdict, MonodromyVerdict::GapDirichlet);
        // shifted by one site the Dirichlet vector is no longer an eigenvector
        let c = monodromy_dirichlet_test(&example_1().shift(1), &Scalar::int(0)).unwrap();
        assert_ne!(c.verdict, MonodromyVerdict::GapDirichlet);
    }

    #[test]
    fn rational_eigenvector_check() {
        let m = transfer_product(&example_1(), &Scalar::int(0), 0, 2).unwrap();
        let (zero, one) = (BigRational::zero(), BigRational::one());
        assert_eq!(rational_eigenvalue_of(&m, [&zero, &one]), Some(BigRational::new(1.into(), 2.into())));
        assert_eq!(rational_eigenvalue_of(&m, [&one, &one]), None);
    }

    fn arb_rational_potential() -> impl Strategy<Value = Potential> {
        (prop::collection::vec((-9i64..=9, 1i64..=4), 1..6), -5i64..5).prop_map(|(w, phase)| {
            Potential::new(
                PotentialKind::Periodic {
                    word: w.into_iter().map(|(a, b)| Scalar::ratio(a, b)).collect(),
                    phase,
                },
                Regime::Rational,
            )
            .unwrap()
        })
    }

    /// Fraction-free (Bareiss) determinant of a dense rational matrix,
    /// after clearing denominators row by row.
    fn bareiss_det(mut a: Vec<Vec<BigRational>>) -> BigRational {
        let n = a.len();
        let mut scale = BigRational::one();
        let mut m: Vec<Vec<BigInt>> = a
            .iter_mut()
            .map(|row| {
                let l = row.iter().fold(BigInt::one(), |acc, x| num_integer::Integer::lcm(&acc, x.denom()));
                scale *= BigRational::from_integer(l.clone());
                row.iter().map(|x| (x * BigRational::from_integer(l.clone())).to_integer()).collect()
            })
            .collect();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n {
            if m[k][k].is_zero() {
                match (k + 1..n).find(|&i| !m[i][k].is_zero()) {
                    Some(i) => {
                        m.swap(k, i);
                        sign = -sign;
                    }
                    None => return BigRational::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    m[i][j] = (&m[i][j] * &m[k][k] - &m[i][k] * &m[k][j]) / &prev;
                }
            }
            prev = m[k][k].clone();
        }
        BigRational::from_integer(sign * &m[n - 1][n - 1]) / scale
    }

    #[test]
    fn bareiss_oracle_sanity() {
        let q = |a: i64| BigRational::from_integer(a.into());
        let a = vec![vec![q(2), q(1), q(0)], vec![q(1), q(2), q(1)], vec![q(0), q(1), q(2)]];
        assert_eq!(bareiss_det(a), q(4));
        let b = vec![vec![q(0), q(1)], vec![q(1), q(0)]];
        assert_eq!(bareiss_det(b), q(-1));
    }

    #[test]
    fn avoidance_sweep_is_clean_and_deterministic() {
        let a = integer_avoidance_sweep(1, 200, 8, 5).unwrap();
        assert!(a.violations.is_empty());
        assert!(a.gap_points > 1000);
        assert_eq!(a, integer_avoidance_sweep(1, 200, 8, 5).unwrap());
    }

    #[test]
    fn integer_sweep_never_certifies_dirichlet() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let len = rng.random_range(1..=8);
            let w: Vec<i64> = (0..len).map(|_| rng.random_range(-5..=5)).collect();
            let p = Potential::periodic_int(&w);
            for z in -8..=8 {
                let c = monodromy_dirichlet_test(&p, &Scalar::int(z)).unwrap();
                assert!(!c.is_dirichlet());
                assert!(c.integrality_holds());
                assert_eq!(c.det, Scalar::int(1));
            }
        }
    }

    proptest! {
        #[test]
        fn products_are_unimodular_and_split(
            p in arb_rational_potential(),
            (zn, zd) in (-7i64..7, 1i64..5),
            l in -12i64..12,
            len in 1i64..15,
            cut in 0i64..14,
        ) {
            let z = Scalar::ratio(zn, zd);
            let r = l + len;
            let m = transfer_product(&p, &z, l, r).unwrap();
            prop_assert_eq!(m.det(), Scalar::ratio(1, 1));
            prop_assert_eq!(&m, &naive_product(&p, &z, l, r));
            let mid = l + cut.min(len - 1);
            let split = transfer_product(&p, &z, mid + 1, r).unwrap()
                .mul(&transfer_product(&p, &z, l, mid).unwrap());
            prop_assert_eq!(m, split);
        }

        #[test]
        fn determinant_matches_brute_force(
            w in prop::collection::vec((-6i64..=6, 1i64..=5), 1..5),
            l in -6i64..6,
            size in 1usize..=9,
            (zn, zd) in (-5i64..5, 1i64..4),
        ) {
            let p = Potential::periodic(w.into_iter().map(|(a, b)| Scalar::ratio(a, b)).collect(), Regime::Rational).unwrap();
            let z = BigRational::new(zn.into(), zd.into());
            let r = l + size as i64 - 1;
            let a: Vec<Vec<BigRational>> = (0..size)
                .map(|i| {
                    (0..size)
                        .map(|j| {
                            if i == j {
                                p.eval(l + i as i64).to_rational().unwrap() - &z
                            } else if i.abs_diff(j) == 1 {
                                BigRational::one()
                            } else {
                                BigRational::zero()
                            }
                        })
                        .collect()
                })
                .collect();
            let d = finite_section_determinant(&p, &Scalar::Rat(z.clone()), l, r).unwrap();
            prop_assert_eq!(d.to_rational().unwrap(), bareiss_det(a));
        }

        #[test]
        fn integer_orbits_stay_integral(w in prop::collection::vec(-5i64..=5, 1..8), z in -8i64..=8) {
            let p = Potential::periodic_int(&w);
            let o = dirichlet_orbit(&p, &Scalar::int(z), 80).unwrap();
            prop_assert!(o.values.iter().all(|v| matches!(v, Scalar::Int(_))));
            prop_assert!(o.pairs_nonvanishing());
            prop_assert_eq!(o.in_ring, Some(true));
        }

        #[test]
        fn discriminant_matches_trace(p in arb_rational_potential(), zs in prop::collection::vec((-30i64..30, 1i64..9), 20)) {
            let d = discriminant(&p).unwrap();
            prop_assert_eq!(d.coefficients.degree(), Some(d.period));
            prop_assert!(d.coefficients.leading().unwrap().is_one());
            for (a, b) in zs {
                let z = BigRational::new(a.into(), b.into());
                let tr = monodromy(&p, &Scalar::Rat(z.clone())).unwrap().trace();
                prop_assert_eq!(Scalar::Rat(d.eval(&z)), tr.coerce(Regime::Rational).unwrap());
            }
        }

        #[test]
        fn discriminant_is_phase_invariant(w in prop::collection::vec(-4i64..=4, 1..7)) {
            let p = Potential::periodic_int(&w);
            let d = discriminant(&p).unwrap().coefficients;
            for k in 0..w.len() as i64 {
                prop_assert_eq!(&discriminant(&p.shift(k)).unwrap().coefficients, &d);
            }
        }
    }
}
