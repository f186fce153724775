//! Limit operators of eventually-periodic potentials, Fredholmness,
//! essential spectra and the finite-section applicability test.

use std::cmp::Ordering;

use num_rational::BigRational;
use num_traits::Signed;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exactalg::{
    discriminant, monodromy_dirichlet_test, rational_eigenvalue_of, transfer_product,
    MonodromyCertificate, MonodromyVerdict, TransferMatrix,
};
use crate::potential::{EventuallyPeriodicParts, Potential, PotentialKind};
use crate::scalar::{Regime, Scalar};
use crate::spectral::{bands, Edge};

/// Matching-determinant magnitude below which the kernel scan flags a
/// possible eigenvalue.
pub const KERNEL_SUSPECT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Shifts `h -> -infinity`.
    Minus,
    /// Shifts `h -> +infinity`.
    Plus,
}

/// One limit operator: the periodic potential `n -> v(n + h)` obtained along
/// shifts `h` in the listed residue classes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitOperator {
    pub direction: Direction,
    pub potential: Potential,
    /// Residues `h mod period` producing this operator.
    pub residues: Vec<i64>,
    pub period: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitOperatorSet {
    pub minus: Vec<LimitOperator>,
    pub plus: Vec<LimitOperator>,
}

impl LimitOperatorSet {
    pub fn len(&self) -> usize {
        self.minus.len() + self.plus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Distinct operators across both directions (as evaluated sequences).
    pub fn distinct(&self) -> Vec<&LimitOperator> {
        let mut out: Vec<&LimitOperator> = Vec::new();
        for op in self.minus.iter().chain(&self.plus) {
            if !out.iter().any(|o| same_sequence(&o.potential, &op.potential)) {
                out.push(op);
            }
        }
        out
    }
}

fn parts(p: &Potential) -> Result<EventuallyPeriodicParts> {
    p.eventually_periodic_parts().ok_or_else(|| {
        Error::EnumerationUndecidable(format!(
            "{} potentials are not eventually periodic",
            match p.kind() {
                PotentialKind::Sturmian { .. } => "sturmian",
                _ => "random",
            }
        ))
    })
}

/// Two periodic potentials agree on all of Z.
fn same_sequence(a: &Potential, b: &Potential) -> bool {
    let (pa, pb) = (a.period().unwrap_or(1), b.period().unwrap_or(1));
    let span = (pa * pb) as i64;
    (0..span).all(|n| a.eval(n) == b.eval(n))
}

fn enumerate(word: &[Scalar], anchor: i64, regime: Regime, direction: Direction) -> Result<Vec<LimitOperator>> {
    let len = word.len() as i64;
    let mut out: Vec<LimitOperator> = Vec::new();
    for j in 0..len {
        let phase = (j - anchor).rem_euclid(len);
        let potential = Potential::new(PotentialKind::Periodic { word: word.to_vec(), phase }, regime)?;
        match out.iter_mut().find(|o| same_sequence(&o.potential, &potential)) {
            Some(o) => o.residues.push(j),
            None => out.push(LimitOperator { direction, potential, residues: vec![j], period: word.len() }),
        }
    }
    Ok(out)
}

/// All limit operators: cyclic shifts of the left word (`h -> -infinity`)
/// and of the right word (`h -> +infinity`), duplicates merged.
pub fn limit_operators(p: &Potential) -> Result<LimitOperatorSet> {
    let parts = parts(p)?;
    Ok(LimitOperatorSet {
        minus: enumerate(&parts.left_word, parts.left_anchor, p.regime(), Direction::Minus)?,
        plus: enumerate(&parts.right_word, parts.right_anchor, p.regime(), Direction::Plus)?,
    })
}

fn exact_z(z: &Scalar) -> Result<BigRational> {
    match z {
        Scalar::Int(_) | Scalar::Rat(_) => Ok(z.to_rational().expect("exact")),
        other => Err(Error::NotInRegime { value: other.to_string(), regime: Regime::Rational }),
    }
}

fn exact_real_potential(p: &Potential) -> Result<()> {
    match p.regime() {
        Regime::Integer | Regime::Rational => Ok(()),
        r => Err(Error::NotInRegime { value: format!("{r:?} potential"), regime: Regime::Rational }),
    }
}

/// Position of `z` relative to the bands of a periodic operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralPosition {
    Gap,
    Band,
    /// `|Delta(z)| = 2` exactly.
    Edge,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandWitness {
    pub direction: Direction,
    pub residues: Vec<i64>,
    pub delta: Scalar,
    pub position: SpectralPosition,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "verdict")]
pub enum FredholmVerdict {
    Fredholm { checks: Vec<BandWitness> },
    NotFredholm { witness: BandWitness, diagnostic: String },
}

impl FredholmVerdict {
    pub fn is_fredholm(&self) -> bool {
        matches!(self, FredholmVerdict::Fredholm { .. })
    }
}

fn position_of(p: &Potential, z: &BigRational) -> Result<(Scalar, SpectralPosition)> {
    let d = discriminant(p)?;
    let delta = d.eval(z);
    let pos = match delta.abs().cmp(&BigRational::from_integer(2.into())) {
        Ordering::Greater => SpectralPosition::Gap,
        Ordering::Less => SpectralPosition::Band,
        Ordering::Equal => SpectralPosition::Edge,
    };
    Ok((Scalar::Rat(delta), pos))
}

/// `H - zI` is Fredholm iff `z` lies outside the bands of every limit
/// operator. Cyclic shifts share one discriminant, so each direction needs
/// a single exact evaluation.
pub fn is_fredholm(p: &Potential, z: &Scalar) -> Result<FredholmVerdict> {
    exact_real_potential(p)?;
    let zq = exact_z(z)?;
    let lim = limit_operators(p)?;
    let mut checks = Vec::new();
    for ops in [&lim.minus, &lim.plus] {
        let op = &ops[0];
        let (delta, position) = position_of(&op.potential, &zq)?;
        let witness = BandWitness {
            direction: op.direction,
            residues: op.residues.clone(),
            delta,
            position,
        };
        if position != SpectralPosition::Gap {
            let diagnostic = match position {
                SpectralPosition::Edge => format!("z = {zq} is a band edge (|Delta| = 2) of a limit operator"),
                _ => format!("z = {zq} lies inside a band of a limit operator"),
            };
            return Ok(FredholmVerdict::NotFredholm { witness, diagnostic });
        }
        checks.push(witness);
    }
    Ok(FredholmVerdict::Fredholm { checks })
}

/// Finite union of closed intervals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalUnion {
    pub intervals: Vec<(Edge, Edge)>,
}

impl IntervalUnion {
    pub fn values(&self) -> Vec<(f64, f64)> {
        self.intervals.iter().map(|(a, b)| (a.value, b.value)).collect()
    }

    pub fn contains(&self, z: f64) -> bool {
        self.intervals.iter().any(|(a, b)| a.value <= z && z <= b.value)
    }
}

/// Union of the band sets of all limit operators. Intervals that touch or
/// overlap are merged.
pub fn essential_spectrum(p: &Potential) -> Result<IntervalUnion> {
    exact_real_potential(p)?;
    let lim = limit_operators(p)?;
    let mut all: Vec<(Edge, Edge)> = Vec::new();
    for ops in [&lim.minus, &lim.plus] {
        let bs = bands(&discriminant(&ops[0].potential)?)?;
        all.extend(bs.bands.into_iter().map(|b| (b.lo, b.hi)));
    }
    all.sort_by(|a, b| a.0.value.total_cmp(&b.0.value));
    let mut merged: Vec<(Edge, Edge)> = Vec::new();
    for (lo, hi) in all {
        match merged.last_mut() {
            Some(last) if lo.value <= last.1.value => {
                if hi.value > last.1.value {
                    last.1 = hi;
                }
            }
            _ => merged.push((lo, hi)),
        }
    }
    Ok(IntervalUnion { intervals: merged })
}

// ---------------------------------------------------------------------------
// Applicability of the finite section method.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    FullLine,
    HalfLine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Holds,
    Fails,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Certificate {
    /// Exact position of `z` relative to a periodic band set.
    Spectrum { delta: Scalar, position: SpectralPosition },
    /// Exact monodromy test of a periodic half-line compression.
    Monodromy(MonodromyCertificate),
    /// Exact eigen-test of the Dirichlet orbit of an eventually-periodic
    /// half-line operator against the monodromy of its right tail:
    /// `eigenvalue` is `Some` iff the orbit pair at `index` is an eigenvector.
    HalfLineKernel { index: i64, pair: [Scalar; 2], eigenvalue: Option<Scalar> },
    /// Float shooting from both tails; `wronskian` is the normalized
    /// matching determinant of the two decaying solutions.
    KernelScan { wronskian: f64, tolerance: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionEntry {
    /// `a`: H, `b`: L_+ for L in Lim_-, `c`: R_- for R in Lim_+ (full line);
    /// `d`: H_+, `e`: R_- for R in Lim_+ (half line).
    pub label: char,
    pub operator: String,
    pub status: Status,
    pub certificates: Vec<Certificate>,
    pub diagnostic: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Overall {
    Applicable,
    NotApplicable,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApplicabilityVerdict {
    pub side: Side,
    pub z: Scalar,
    pub conditions: Vec<ConditionEntry>,
    pub overall: Overall,
}

impl ApplicabilityVerdict {
    fn from_conditions(side: Side, z: Scalar, conditions: Vec<ConditionEntry>) -> ApplicabilityVerdict {
        let overall = if conditions.iter().any(|c| c.status == Status::Fails) {
            Overall::NotApplicable
        } else if conditions.iter().any(|c| c.status == Status::Undetermined) {
            Overall::Undetermined
        } else {
            Overall::Applicable
        };
        ApplicabilityVerdict { side, z, conditions, overall }
    }

    pub fn failing(&self) -> impl Iterator<Item = &ConditionEntry> {
        self.conditions.iter().filter(|c| c.status == Status::Fails)
    }

    pub fn undetermined(&self) -> impl Iterator<Item = &ConditionEntry> {
        self.conditions.iter().filter(|c| c.status == Status::Undetermined)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("verdicts serialize")
    }
}

/// Half-line compression of a periodic operator, decided exactly: invertible
/// iff `z` is in a gap and not a Dirichlet eigenvalue.
fn periodic_half_line(label: char, operator: String, p: &Potential, z: &Scalar) -> Result<ConditionEntry> {
    let cert = monodromy_dirichlet_test(p, z)?;
    let (status, diagnostic) = match cert.verdict {
        MonodromyVerdict::NotGap => {
            let edge = cert.trace.to_rational().expect("exact").abs() == BigRational::from_integer(2.into());
            (Status::Fails, Some(if edge { "z is a band edge" } else { "z lies in a band" }.to_string()))
        }
        MonodromyVerdict::GapDirichlet => (Status::Fails, Some("z is a Dirichlet eigenvalue".to_string())),
        MonodromyVerdict::GapNoDirichlet | MonodromyVerdict::GapDirichletImpossibleInteger => (Status::Holds, None),
    };
    Ok(ConditionEntry { label, operator, status, certificates: vec![Certificate::Monodromy(cert)], diagnostic })
}

fn spectrum_entry(label: char, operator: String, p: &Potential, z: &BigRational) -> Result<ConditionEntry> {
    let (delta, position) = position_of(p, z)?;
    let (status, diagnostic) = match position {
        SpectralPosition::Gap => (Status::Holds, None),
        SpectralPosition::Band => (Status::Fails, Some("z lies in a band".to_string())),
        SpectralPosition::Edge => (Status::Fails, Some("z is a band edge".to_string())),
    };
    Ok(ConditionEntry { label, operator, status, certificates: vec![Certificate::Spectrum { delta, position }], diagnostic })
}

fn residue_tag(op: &LimitOperator) -> String {
    let r: Vec<String> = op.residues.iter().map(|r| r.to_string()).collect();
    format!("residue {}", r.join(","))
}

/// `L_+` for every left limit operator and `R_-` (via `(flip R)_+`) for
/// every right one.
fn tail_conditions(lim: &LimitOperatorSet, z: &Scalar, full_line: bool) -> Result<Vec<ConditionEntry>> {
    let mut out = Vec::new();
    if full_line {
        for l in &lim.minus {
            out.push(periodic_half_line('b', format!("L_+ ({})", residue_tag(l)), &l.potential, z)?);
        }
    }
    let label = if full_line { 'c' } else { 'e' };
    for r in &lim.plus {
        out.push(periodic_half_line(label, format!("R_- via flip(R)_+ ({})", residue_tag(r)), &r.potential.reflect(), z)?);
    }
    Ok(out)
}

/// `T_z(r) ... T_z(l)` over the rationals.
fn product_q(p: &Potential, z: &Scalar, l: i64, r: i64) -> Result<TransferMatrix> {
    if l > r {
        return Ok(TransferMatrix::identity(Regime::Rational));
    }
    transfer_product(p, &z.coerce(Regime::Rational)?, l, r)
}

/// Exact kernel test for the half-line compression of an eventually-periodic
/// (non-periodic) operator whose right tail has `z` in a gap.
fn half_line_kernel(p: &Potential, parts: &EventuallyPeriodicParts, z: &Scalar) -> Result<ConditionEntry> {
    let s = parts.right_start().max(0);
    let period = parts.right_word.len() as i64;
    // (x_{s-1}, x_s) from x_{-1} = 0, x_0 = 1
    let to_s = product_q(p, z, 0, s - 1)?;
    let pair = [to_s.a12().clone(), to_s.a22().clone()];
    let m = product_q(p, z, s, s + period - 1)?;
    let u = [pair[0].to_rational().expect("exact"), pair[1].to_rational().expect("exact")];
    let lambda = rational_eigenvalue_of(&m, [&u[0], &u[1]]);
    let decaying = lambda.as_ref().is_some_and(|l| l.abs() < BigRational::from_integer(1.into()));
    let (status, diagnostic) = if decaying {
        (Status::Fails, Some("z is an eigenvalue of H_+".to_string()))
    } else {
        (Status::Holds, None)
    };
    Ok(ConditionEntry {
        label: 'd',
        operator: "H_+".into(),
        status,
        certificates: vec![Certificate::HalfLineKernel { index: s, pair, eigenvalue: lambda.map(Scalar::Rat) }],
        diagnostic,
    })
}

/// Unit eigenvector of a real 2x2 matrix for eigenvalue `lambda`.
fn eigenvector(m: [[f64; 2]; 2], lambda: f64) -> [f64; 2] {
    let a = [m[0][1], lambda - m[0][0]];
    let b = [lambda - m[1][1], m[1][0]];
    let v = if a[0].hypot(a[1]) >= b[0].hypot(b[1]) { a } else { b };
    let n = v[0].hypot(v[1]);
    [v[0] / n, v[1] / n]
}

/// Real eigenvalues of a determinant-one matrix with `|trace| > 2`,
/// ordered `(|lambda| > 1, |lambda| < 1)`.
fn hyperbolic_eigenvalues(m: [[f64; 2]; 2]) -> (f64, f64) {
    let t = m[0][0] + m[1][1];
    let root = (t * t - 4.0).max(0.0).sqrt();
    let big = 0.5 * (t + t.signum() * root);
    (big, 1.0 / big)
}

/// Float shooting for `ker(H - zI)` on the full line. The left-decaying
/// solution is the expanding eigendirection of the left monodromy at the
/// core's start; it is carried across the core and compared with the
/// contracting eigendirection of the right monodromy.
fn kernel_scan(p: &Potential, parts: &EventuallyPeriodicParts, z: &Scalar) -> Result<ConditionEntry> {
    let (q, per) = (parts.left_word.len() as i64, parts.right_word.len() as i64);
    let (start, rs) = (parts.start, parts.right_start());
    let ml = product_q(p, z, start - q, start - 1)?.to_f64();
    let core = product_q(p, z, start, rs - 1)?.to_f64();
    let mr = product_q(p, z, rs, rs + per - 1)?.to_f64();
    let (grow_l, _) = hyperbolic_eigenvalues(ml);
    let (_, shrink_r) = hyperbolic_eigenvalues(mr);
    let ul = eigenvector(ml, grow_l);
    let carried = [
        core[0][0] * ul[0] + core[0][1] * ul[1],
        core[1][0] * ul[0] + core[1][1] * ul[1],
    ];
    let n = carried[0].hypot(carried[1]);
    let carried = [carried[0] / n, carried[1] / n];
    let ur = eigenvector(mr, shrink_r);
    let wronskian = (carried[0] * ur[1] - carried[1] * ur[0]).abs();
    let (status, diagnostic) = if wronskian < KERNEL_SUSPECT_TOL {
        (Status::Undetermined, Some(format!("kernel suspect: matching determinant {wronskian:e}")))
    } else {
        (Status::Holds, None)
    };
    Ok(ConditionEntry {
        label: 'a',
        operator: "H".into(),
        status,
        certificates: vec![Certificate::KernelScan { wronskian, tolerance: KERNEL_SUSPECT_TOL }],
        diagnostic,
    })
}

/// Candidate kernel vector of `H - zI` for an eventually-periodic potential.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelVector {
    pub start: i64,
    pub values: Vec<f64>,
    /// `x_{n+q} = mu x_n` on the right tail (period `q`).
    pub right_multiplier: f64,
    /// `x_{n-q} = x_n / g` on the left tail; this is `1 / g`.
    pub left_multiplier: f64,
    /// Sine of the angle between the carried right solution and the
    /// left-decaying direction; zero for a true kernel vector.
    pub mismatch: f64,
}

impl KernelVector {
    pub fn get(&self, n: i64) -> f64 {
        self.values[(n - self.start) as usize]
    }
}

/// Start from the contracting eigendirection of the right monodromy, carry
/// it across the core and extend both tails geometrically with the monodromy
/// eigenvalues. Values on `[l, r]`.
pub fn kernel_vector(p: &Potential, z: &Scalar, l: i64, r: i64) -> Result<KernelVector> {
    if l > r {
        return Err(Error::InvalidRange { l, r });
    }
    exact_real_potential(p)?;
    let zq = exact_z(z)?;
    let parts = parts(p)?;
    for (word, anchor) in [(&parts.left_word, parts.left_anchor), (&parts.right_word, parts.right_anchor)] {
        let tail = Potential::periodic(word.clone(), p.regime())?.shift(-anchor);
        if !matches!(position_of(&tail, &zq)?.1, SpectralPosition::Gap) {
            return Err(Error::Inconclusive("z is not in a gap of both periodic tails".into()));
        }
    }
    let (q, per) = (parts.left_word.len() as i64, parts.right_word.len() as i64);
    let (start, rs) = (parts.start, parts.right_start());
    let ml = product_q(p, z, start - q, start - 1)?.to_f64();
    let mr = product_q(p, z, rs, rs + per - 1)?.to_f64();
    let (grow_l, _) = hyperbolic_eigenvalues(ml);
    let (_, shrink_r) = hyperbolic_eigenvalues(mr);
    let zf = z.to_f64();
    // base values on [start - q - 1, rs + per - 1]
    let base_lo = start - q - 1;
    let base_hi = rs + per - 1;
    let mut base = vec![0.0; (base_hi - base_lo + 1) as usize];
    let at = |n: i64| (n - base_lo) as usize;
    let ur = eigenvector(mr, shrink_r);
    base[at(rs - 1)] = ur[0];
    base[at(rs)] = ur[1];
    for n in rs..base_hi {
        base[at(n + 1)] = (zf - p.eval_f64(n)) * base[at(n)] - base[at(n - 1)];
    }
    for n in (base_lo + 1..rs).rev() {
        base[at(n - 1)] = (zf - p.eval_f64(n)) * base[at(n)] - base[at(n + 1)];
    }
    let ul = eigenvector(ml, grow_l);
    let (a, b) = (base[at(start - 1)], base[at(start)]);
    let mismatch = (a * ul[1] - b * ul[0]).abs() / a.hypot(b);
    let value = |n: i64| -> f64 {
        if n > base_hi {
            let k = (n - rs) / per;
            shrink_r.powi(k as i32) * base[at(n - k * per)]
        } else if n < start - q {
            let k = (start - q - n + q - 1) / q;
            base[at(n + k * q)] / grow_l.powi(k as i32)
        } else {
            base[at(n)]
        }
    };
    Ok(KernelVector {
        start: l,
        values: (l..=r).map(value).collect(),
        right_multiplier: shrink_r,
        left_multiplier: 1.0 / grow_l,
        mismatch,
    })
}

/// Invertibility conditions for the finite section method with arbitrary
/// cut-off sequences.
///
/// Full line: (a) `H`, (b) `L_+` for every `L` in `Lim_-`, (c) `R_-` for
/// every `R` in `Lim_+`. Half line: (d) `H_+`, (e) `R_-` for every `R` in
/// `Lim_+`. `R_-` is decided through `(flip R)_+`. Periodic tails are decided
/// exactly; only the kernel of a non-periodic full-line operator needs the
/// float scan, which reports `undetermined` rather than guessing.
pub fn fsm_applicability(p: &Potential, side: Side, z: &Scalar) -> Result<ApplicabilityVerdict> {
    exact_real_potential(p)?;
    let zq = exact_z(z)?;
    let lim = limit_operators(p)?;
    let parts = parts(p)?;
    let periodic = p.period().is_some();
    let mut conditions = Vec::new();
    match side {
        Side::FullLine => {
            let a = if periodic {
                spectrum_entry('a', "H".into(), p, &zq)?
            } else {
                match is_fredholm(p, z)? {
                    FredholmVerdict::NotFredholm { witness, diagnostic } => ConditionEntry {
                        label: 'a',
                        operator: "H".into(),
                        status: Status::Fails,
                        certificates: vec![Certificate::Spectrum { delta: witness.delta, position: witness.position }],
                        diagnostic: Some(diagnostic),
                    },
                    FredholmVerdict::Fredholm { .. } => kernel_scan(p, &parts, z)?,
                }
            };
            conditions.push(a);
            conditions.extend(tail_conditions(&lim, z, true)?);
        }
        Side::HalfLine => {
            let d = if periodic {
                periodic_half_line('d', "H_+".into(), p, z)?
            } else {
                let right = &lim.plus[0].potential;
                let entry = spectrum_entry('d', "H_+".into(), right, &zq)?;
                if entry.status == Status::Holds {
                    half_line_kernel(p, &parts, z)?
                } else {
                    entry
                }
            };
            conditions.push(d);
            conditions.extend(tail_conditions(&lim, z, false)?);
        }
    }
    Ok(ApplicabilityVerdict::from_conditions(side, z.coerce(z.regime())?, conditions))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;
    use crate::spectral::smallest_singular_value;
    use proptest::prelude::*;

    fn example_1() -> Potential {
        Potential::periodic(
            vec![Scalar::ratio(1, 2), Scalar::int(2), Scalar::ratio(1, 2)],
            Regime::Rational,
        )
        .unwrap()
    }

    fn zero_four(core: &[i64]) -> Potential {
        Potential::eventually_periodic(
            vec![Scalar::int(0)],
            core.iter().map(|&v| Scalar::int(v)).collect(),
            0,
            vec![Scalar::int(4)],
            Regime::Integer,
        )
        .unwrap()
    }

    fn example_2() -> Potential {
        let bits = |s: &str| s.bytes().map(|b| Scalar::int((b - b'0') as i64)).collect::<Vec<_>>();
        Potential::eventually_periodic(bits("110001100011"), vec![], 0, bits("10101"), Regime::Integer).unwrap()
    }

    #[test]
    fn enumeration_examples() {
        let lim = limit_operators(&example_1()).unwrap();
        assert_eq!(lim.minus.len(), 3);
        assert_eq!(lim.plus.len(), 3);
        assert_eq!(lim.distinct().len(), 3);
        assert!(lim.plus.iter().any(|o| same_sequence(&o.potential, &example_1())));

        let lim = limit_operators(&Potential::periodic_int(&[4])).unwrap();
        assert_eq!((lim.minus.len(), lim.plus.len(), lim.distinct().len()), (1, 1, 1));

        let lim = limit_operators(&zero_four(&[7, -3, 9])).unwrap();
        assert_eq!(lim.minus[0].potential, Potential::periodic_int(&[0]));
        assert_eq!(lim.plus[0].potential, Potential::periodic_int(&[4]));

        let lim = limit_operators(&Potential::periodic_int(&[1, 0, 1, 0])).unwrap();
        assert_eq!(lim.plus.len(), 2);
        assert_eq!(lim.plus[0].residues, vec![0, 2]);

        assert!(matches!(limit_operators(&Potential::fibonacci()), Err(Error::EnumerationUndecidable(_))));
    }

    #[test]
    fn limit_windows_recur() {
        for p in [example_2(), zero_four(&[1, 2, 3]), example_1().shift(1)] {
            let lim = limit_operators(&p).unwrap();
            for (ops, sign) in [(&lim.minus, -1i64), (&lim.plus, 1)] {
                for op in ops {
                    for w in [1usize, 7, 50] {
                        let window: Vec<Scalar> = (0..w as i64).map(|n| op.potential.eval(n)).collect();
                        let hits = (0..10_000i64)
                            .map(|h| sign * h)
                            .filter(|&h| (0..w as i64).all(|n| p.eval(h + n) == window[n as usize]))
                            .count();
                        assert!(hits >= 3, "window {w} of {:?}", op.residues);
                    }
                }
            }
        }
    }

    #[test]
    fn fredholm_examples() {
        assert!(is_fredholm(&example_1(), &Scalar::int(0)).unwrap().is_fredholm());
        assert!(!is_fredholm(&Potential::periodic_int(&[0]), &Scalar::int(0)).unwrap().is_fredholm());
        match is_fredholm(&zero_four(&[1]), &Scalar::int(3)).unwrap() {
            FredholmVerdict::NotFredholm { witness, .. } => assert_eq!(witness.direction, Direction::Plus),
            v => panic!("{v:?}"),
        }
        match is_fredholm(&zero_four(&[]), &Scalar::int(2)).unwrap() {
            FredholmVerdict::NotFredholm { witness, .. } => assert_eq!(witness.position, SpectralPosition::Edge),
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn essential_spectrum_examples() {
        let es = essential_spectrum(&Potential::periodic_int(&[4])).unwrap();
        assert_eq!(es.values(), vec![(2.0, 6.0)]);
        let es = essential_spectrum(&zero_four(&[5])).unwrap();
        assert_eq!(es.values(), vec![(-2.0, 6.0)]);
        let es = essential_spectrum(&example_1()).unwrap();
        assert_eq!(es.intervals.len(), 3);
        assert!(!es.contains(0.0));
    }

    #[test]
    fn applicability_examples() {
        let v = fsm_applicability(&Potential::periodic_int(&[4]), Side::FullLine, &Scalar::int(0)).unwrap();
        assert_eq!(v.overall, Overall::Applicable);
        assert!(v.conditions.iter().all(|c| c.status == Status::Holds));

        let v = fsm_applicability(&example_1(), Side::HalfLine, &Scalar::int(0)).unwrap();
        assert_eq!(v.overall, Overall::NotApplicable);
        assert_eq!(v.conditions[0].label, 'd');
        assert_eq!(v.conditions[0].status, Status::Fails);

        let v = fsm_applicability(&example_1(), Side::FullLine, &Scalar::int(0)).unwrap();
        assert_eq!(v.conditions[0].status, Status::Holds);
        assert_eq!(v.overall, Overall::NotApplicable);
        let failing: Vec<_> = v.failing().map(|c| c.operator.clone()).collect();
        assert!(failing.iter().any(|o| o.starts_with("L_+")), "{failing:?}");

        let json = v.to_json();
        assert!(json.contains("\"label\": \"a\""));
    }

    #[test]
    fn example_2_kernel_is_suspected() {
        let v = fsm_applicability(&example_2(), Side::FullLine, &Scalar::int(0)).unwrap();
        assert_eq!(v.conditions[0].status, Status::Undetermined);
        assert_eq!(v.overall, Overall::Undetermined);
        // the half line has no kernel
        let v = fsm_applicability(&example_2(), Side::HalfLine, &Scalar::int(0)).unwrap();
        assert_eq!(v.conditions[0].status, Status::Holds);
    }

    #[test]
    fn example_2_kernel_vector() {
        let p = example_2();
        let kv = kernel_vector(&p, &Scalar::int(0), -241, 101).unwrap();
        assert!(kv.mismatch < 1e-12);
        let (mut res, mut nrm) = (0.0, 0.0);
        for n in -240..=100 {
            let h = kv.get(n - 1) + p.eval_f64(n) * kv.get(n) + kv.get(n + 1);
            res += h * h;
            nrm += kv.get(n).powi(2);
        }
        assert!((res / nrm).sqrt() < 1e-10);
        for k in 1..=8 {
            assert!((kv.get(-12 * k) - kv.get(5 * k)).abs() < 1e-10);
        }
        assert!(kernel_vector(&zero_four(&[1]), &Scalar::int(3), 0, 5).is_err());
    }

    #[test]
    fn eventually_periodic_without_kernel() {
        let v = fsm_applicability(&zero_four(&[1, 1]), Side::FullLine, &Scalar::int(-3)).unwrap();
        assert_eq!(v.conditions[0].status, Status::Holds, "{v:?}");
        assert_eq!(v.overall, Overall::Applicable);
    }

    #[test]
    fn flip_duality_against_left_truncations() {
        // R_- sections [-(m-1), 0] are the reversed (flip R)_+ sections [0, m-1].
        for r in [example_1(), example_1().shift(1), example_1().shift(2), Potential::periodic_int(&[3, -1])] {
            let flipped = r.reflect();
            let entry = periodic_half_line('c', "R_-".into(), &flipped, &Scalar::int(0)).unwrap();
            let mut last = 0.0;
            for m in [30i64, 60, 90] {
                let left = smallest_singular_value(&r, -(m - 1), 0, 0.0).unwrap();
                let right = smallest_singular_value(&flipped, 0, m - 1, 0.0).unwrap();
                assert!((left - right).abs() <= 1e-12 * left.max(1.0));
                last = left;
            }
            let dirichlet = matches!(&entry.certificates[0], Certificate::Monodromy(c) if c.is_dirichlet());
            assert_eq!(dirichlet, last < 1e-6, "{r:?}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn integer_fredholm_implies_half_line(w in prop::collection::vec(-4i64..=4, 1..6), core in prop::collection::vec(-4i64..=4, 0..4), right in prop::collection::vec(-4i64..=4, 1..5), z in -6i64..=6) {
            let s = |v: &[i64]| v.iter().map(|&x| Scalar::int(x)).collect::<Vec<_>>();
            let p = Potential::eventually_periodic(s(&w), s(&core), 0, s(&right), Regime::Integer).unwrap();
            let zs = Scalar::int(z);
            if is_fredholm(&p, &zs).unwrap().is_fredholm() {
                let v = fsm_applicability(&p, Side::HalfLine, &zs).unwrap();
                prop_assert_eq!(v.conditions[0].status, Status::Holds);
                prop_assert!(v.conditions.iter().all(|c| c.status == Status::Holds));
            }
        }
    }

    #[test]
    fn invertible_periodic_is_fsm_applicable() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut tested = 0;
        while tested < 500 {
            let len = rng.random_range(1..=6);
            let w: Vec<i64> = (0..len).map(|_| rng.random_range(-5..=5)).collect();
            let p = Potential::periodic_int(&w);
            let delta = discriminant(&p).unwrap().eval(&BigRational::zero());
            if delta.abs() <= BigRational::from_integer(2.into()) {
                continue;
            }
            tested += 1;
            let v = fsm_applicability(&p, Side::FullLine, &Scalar::int(0)).unwrap();
            assert_eq!(v.overall, Overall::Applicable, "{w:?}");
            assert_eq!(v.undetermined().count(), 0);
        }
    }
}
