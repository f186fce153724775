//! Finite section method: growing truncations, section solves, a trusted
//! reference solution, convergence verdicts and stability scans.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactalg::least_squares_slope;
use crate::limitops::Side;
use crate::potential::Potential;
use crate::spectral::smallest_singular_value;

/// Relative pivot size below which LDL^T hands over to Givens QR.
pub const PIVOT_TOL: f64 = 1e-14;
/// Required relative residual of every section solve.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Rows exempt from the monotonicity and invertibility checks.
pub const BURN_IN_ROWS: usize = 5;
/// Final error required for `applicable_observed`.
pub const CONVERGED_ERROR: f64 = 1e-8;
/// Inverse norms above this are divergence witnesses.
pub const DIVERGENCE_THRESHOLD: f64 = 1e8;
/// Allowed max/min ratio of inverse norms over the trailing half.
pub const INVERSE_NORM_SPREAD: f64 = 10.0;
/// Allowed rise of an error above the smallest earlier error. With arbitrary
/// cut-offs the error depends on the boundary phases, so it is not monotone.
pub const ERROR_FLUCTUATION: f64 = 100.0;
/// Default size cap of the reference truncation.
pub const REFERENCE_SIZE_CAP: usize = 1 << 20;
/// Default tolerance of the reference solution.
pub const REFERENCE_TOL: f64 = 1e-13;

/// Cut-off sequence `c_0, c_1, ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sequence {
    /// `start + n * step`.
    Arithmetic { start: i64, step: i64 },
    /// `round(start * ratio^n)`.
    Geometric { start: i64, ratio: f64 },
    Explicit { values: Vec<i64> },
}

impl Sequence {
    fn terms(&self, count: Option<usize>) -> Result<Vec<i64>> {
        match self {
            Sequence::Explicit { values } => {
                let n = count.unwrap_or(values.len());
                if n > values.len() {
                    return Err(Error::InvalidScheme(format!("count {n} exceeds {} explicit cut-offs", values.len())));
                }
                Ok(values[..n].to_vec())
            }
            Sequence::Arithmetic { start, step } => {
                let n = count.ok_or_else(|| Error::InvalidScheme("arithmetic cut-offs need a count".into()))?;
                Ok((0..n as i64).map(|k| start + k * step).collect())
            }
            Sequence::Geometric { start, ratio } => {
                let n = count.ok_or_else(|| Error::InvalidScheme("geometric cut-offs need a count".into()))?;
                if !(ratio.is_finite() && *ratio > 1.0) {
                    return Err(Error::InvalidScheme(format!("geometric ratio {ratio} must exceed 1")));
                }
                let terms: Vec<f64> = (0..n as i32).map(|k| (*start as f64) * ratio.powi(k)).collect();
                if terms.iter().any(|t| t.abs() > 1e15) {
                    return Err(Error::InvalidScheme("geometric cut-offs overflow".into()));
                }
                Ok(terms.into_iter().map(|t| t.round() as i64).collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cutoffs {
    /// `l_n`, full line only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left: Option<Sequence>,
    /// `r_n`.
    pub right: Sequence,
}

/// Sections `[l_n, r_n]`; the half line uses `l_n = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionScheme {
    pub side: Side,
    pub cutoffs: Cutoffs,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
}

impl SectionScheme {
    pub fn half_line(right: Sequence, count: Option<usize>) -> SectionScheme {
        SectionScheme { side: Side::HalfLine, cutoffs: Cutoffs { left: None, right }, count }
    }

    pub fn full_line(left: Sequence, right: Sequence, count: Option<usize>) -> SectionScheme {
        SectionScheme { side: Side::FullLine, cutoffs: Cutoffs { left: Some(left), right }, count }
    }

    /// Validated sections.
    pub fn sections(&self) -> Result<Vec<(i64, i64)>> {
        let explicit_len = |q: &Sequence| match q {
            Sequence::Explicit { values } => Some(values.len()),
            _ => None,
        };
        let count = self
            .count
            .or_else(|| explicit_len(&self.cutoffs.right))
            .or_else(|| self.cutoffs.left.as_ref().and_then(explicit_len));
        let r = self.cutoffs.right.terms(count)?;
        let l = match (self.side, &self.cutoffs.left) {
            (Side::HalfLine, None) => vec![0; r.len()],
            (Side::HalfLine, Some(_)) => {
                return Err(Error::InvalidScheme("half-line schemes take no left cut-offs".into()))
            }
            (Side::FullLine, Some(seq)) => seq.terms(Some(r.len()))?,
            (Side::FullLine, None) => return Err(Error::InvalidScheme("full-line schemes need left cut-offs".into())),
        };
        if l.len() != r.len() {
            return Err(Error::InvalidScheme(format!("{} left but {} right cut-offs", l.len(), r.len())));
        }
        if r.is_empty() {
            return Err(Error::InvalidScheme("no sections".into()));
        }
        for (n, (&a, &b)) in l.iter().zip(&r).enumerate() {
            if a > b {
                return Err(Error::InvalidScheme(format!("section {n}: l = {a} exceeds r = {b}")));
            }
        }
        for n in 1..r.len() {
            match self.side {
                Side::HalfLine if r[n] <= r[n - 1] => {
                    return Err(Error::InvalidScheme(format!("r_n must increase strictly (n = {n})")))
                }
                Side::FullLine if l[n] > l[n - 1] || r[n] < r[n - 1] || (l[n], r[n]) == (l[n - 1], r[n - 1]) => {
                    return Err(Error::InvalidScheme(format!("sections must grow at n = {n}")))
                }
                _ => {}
            }
        }
        if self.side == Side::FullLine && r.len() > 1 && (l[l.len() - 1] == l[0] || r[r.len() - 1] == r[0]) {
            return Err(Error::InvalidScheme("both cut-offs must move outwards".into()));
        }
        Ok(l.into_iter().zip(r).collect())
    }
}

/// A finitely supported vector `values[i]` at index `start + i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompactVector {
    pub start: i64,
    pub values: Vec<f64>,
}

impl CompactVector {
    pub fn unit(n: i64) -> CompactVector {
        CompactVector { start: n, values: vec![1.0] }
    }

    pub fn end(&self) -> i64 {
        self.start + self.values.len() as i64 - 1
    }

    pub fn get(&self, n: i64) -> f64 {
        if n < self.start {
            return 0.0;
        }
        self.values.get((n - self.start) as usize).copied().unwrap_or(0.0)
    }

    /// Restriction to `[l, r]`.
    pub fn window(&self, l: i64, r: i64) -> Vec<f64> {
        (l..=r).map(|n| self.get(n)).collect()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.values)
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `(H - zI)_{l..r} x`.
fn apply_section(a: &[f64], x: &[f64]) -> Vec<f64> {
    let n = a.len();
    (0..n)
        .map(|i| {
            let mut s = a[i] * x[i];
            if i > 0 {
                s += x[i - 1];
            }
            if i + 1 < n {
                s += x[i + 1];
            }
            s
        })
        .collect()
}

fn ldlt_solve(a: &[f64], b: &[f64], scale: f64) -> Option<Vec<f64>> {
    let n = a.len();
    let mut d = vec![0.0; n];
    for i in 0..n {
        d[i] = if i == 0 { a[0] } else { a[i] - 1.0 / d[i - 1] };
        if d[i].abs() < PIVOT_TOL * scale || !d[i].is_finite() {
            return None;
        }
    }
    let mut y = b.to_vec();
    for i in 1..n {
        y[i] -= y[i - 1] / d[i - 1];
    }
    for i in 0..n {
        y[i] /= d[i];
    }
    for i in (0..n - 1).rev() {
        y[i] -= y[i + 1] / d[i];
    }
    Some(y)
}

/// Givens QR of the tridiagonal section; returns the solution and
/// `min |R_ii|`, an upper bound for `sigma_min`.
fn givens_solve(a: &[f64], b: &[f64]) -> (Vec<f64>, f64) {
    let n = a.len();
    // R has bands r0 (diagonal), r1, r2; rows are rotated pairwise.
    let (mut r0, mut r1, mut r2) = (a.to_vec(), vec![0.0; n], vec![0.0; n]);
    for i in 0..n.saturating_sub(1) {
        r1[i] = 1.0;
    }
    let mut rhs = b.to_vec();
    // sub-diagonal entry below row i is always 1
    for i in 0..n.saturating_sub(1) {
        let (x, y) = (r0[i], 1.0);
        let h = x.hypot(y);
        let (c, s) = (x / h, y / h);
        // rows i and i+1; columns i, i+1, i+2
        let row_i = [r0[i], r1[i], r2[i]];
        let row_j = [1.0, a[i + 1], if i + 2 < n { 1.0 } else { 0.0 }];
        r0[i] = c * row_i[0] + s * row_j[0];
        r1[i] = c * row_i[1] + s * row_j[1];
        r2[i] = c * row_i[2] + s * row_j[2];
        // new row i+1 starts at column i+1
        let next1 = -s * row_i[1] + c * row_j[1];
        let next2 = -s * row_i[2] + c * row_j[2];
        r0[i + 1] = next1;
        r1[i + 1] = next2;
        r2[i + 1] = 0.0;
        let (bi, bj) = (rhs[i], rhs[i + 1]);
        rhs[i] = c * bi + s * bj;
        rhs[i + 1] = -s * bi + c * bj;
        // the next row pair starts from the rotated remainder of row i+1
        if i + 1 < n - 1 {
            // row i+1 currently holds [next1, next2, 0] in columns i+1..i+3 and
            // the untouched superdiagonal entry of the original row i+1 was
            // already folded into next2.
        }
    }
    let min_diag = r0.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = rhs[i];
        if i + 1 < n {
            s -= r1[i] * x[i + 1];
        }
        if i + 2 < n {
            s -= r2[i] * x[i + 2];
        }
        x[i] = s / r0[i];
    }
    (x, min_diag)
}

/// Solve `(H - zI)_{l..r} x = b` (`b` indexed from `l`).
///
/// LDL^T with pivot monitoring; a pivot below `1e-14 * scale` switches to
/// Givens QR. The residual is re-verified by direct multiplication.
pub fn solve_section(p: &Potential, z: f64, l: i64, r: i64, b: &[f64]) -> Result<Vec<f64>> {
    if l > r {
        return Err(Error::InvalidRange { l, r });
    }
    if b.len() as i64 != r - l + 1 || b.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidScheme(format!("right-hand side must hold {} finite values", r - l + 1)));
    }
    let a: Vec<f64> = p.window_f64(l, r).into_iter().map(|v| v - z).collect();
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())) + 2.0;
    let bnorm = norm(b);
    let accept = |x: &[f64]| {
        let res: Vec<f64> = apply_section(&a, x).iter().zip(b).map(|(u, v)| u - v).collect();
        norm(&res) <= RESIDUAL_TOL * bnorm && x.iter().all(|v| v.is_finite())
    };
    if let Some(x) = ldlt_solve(&a, b, scale) {
        if accept(&x) {
            return Ok(x);
        }
    }
    let (x, min_diag) = givens_solve(&a, b);
    if min_diag < PIVOT_TOL * scale || !accept(&x) {
        return Err(Error::SingularSection { l, r, sigma_min_estimate: min_diag });
    }
    Ok(x)
}

/// Trusted solution of `(H - zI) x = b` on the full or half line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reference {
    pub start: i64,
    pub values: Vec<f64>,
    /// Size of the final truncation.
    pub size: usize,
    pub residual: f64,
    /// l2 mass in the outer half of the padding.
    pub tail_mass: f64,
    /// Change of the restricted solution under the last doubling.
    pub change: f64,
}

impl Reference {
    pub fn get(&self, n: i64) -> f64 {
        if n < self.start {
            return 0.0;
        }
        self.values.get((n - self.start) as usize).copied().unwrap_or(0.0)
    }

    pub fn end(&self) -> i64 {
        self.start + self.values.len() as i64 - 1
    }
}

/// Boundary offsets tried at every doubling level. A truncation whose edge
/// supports an almost-eigenvector of a one-sided limit operator leaves l2
/// mass at that edge; shifting the edge by a few sites removes it.
const REFERENCE_OFFSETS: i64 = 5;

struct Trial {
    l: i64,
    x: Vec<f64>,
    left_tail: f64,
    right_tail: f64,
}

fn reference_trial(p: &Potential, z: f64, b: &CompactVector, l: i64, r: i64, inner: (i64, i64), side: Side) -> Result<Option<Trial>> {
    let rhs = b.window(l, r);
    match solve_section(p, z, l, r, &rhs) {
        Err(Error::SingularSection { .. }) => Ok(None),
        Err(e) => Err(e),
        Ok(x) => {
            let (mut lt, mut rt) = (0.0, 0.0);
            for (i, v) in x.iter().enumerate() {
                let n = l + i as i64;
                if side == Side::FullLine && n < inner.0 {
                    lt += v * v;
                } else if n > inner.1 {
                    rt += v * v;
                }
            }
            Ok(Some(Trial { l, x, left_tail: lt.sqrt(), right_tail: rt.sqrt() }))
        }
    }
}

/// Solve on truncations padded by `32, 64, ...` sites around the support of
/// `b` until the outer half of the padding carries l2 mass below `tol` and
/// the last doubling moved the solution by less than `tol` (both relative to
/// `||b||`). At each level the left and then the right edge is moved by up
/// to four extra sites to minimise the mass near that edge. Fails with
/// `Inconclusive` beyond `cap` sites.
pub fn reference_solution(p: &Potential, side: Side, z: f64, b: &CompactVector, tol: f64, cap: usize) -> Result<Reference> {
    if b.values.is_empty() || b.norm() == 0.0 {
        return Err(Error::InvalidScheme("right-hand side is zero".into()));
    }
    if side == Side::HalfLine && b.start < 0 {
        return Err(Error::InvalidScheme("half-line right-hand side must live on n >= 0".into()));
    }
    let bnorm = b.norm();
    let mut pad: i64 = 32;
    let mut previous: Option<(i64, Vec<f64>)> = None;
    loop {
        let (l0, r0) = match side {
            Side::FullLine => (b.start - pad, b.end() + pad),
            Side::HalfLine => (0, b.end() + pad),
        };
        if (r0 - l0 + 1 + 2 * REFERENCE_OFFSETS) as usize > cap {
            return Err(Error::Inconclusive(format!("no convergence up to {cap} sites (padding {})", pad / 2)));
        }
        let inner = (b.start - pad / 2, b.end() + pad / 2);
        let better = |best: &Option<Trial>, t: &Option<Trial>, key: fn(&Trial) -> f64| match (best, t) {
            (_, None) => false,
            (None, Some(_)) => true,
            (Some(a), Some(c)) => key(c) < key(a),
        };
        let mut best: Option<Trial> = None;
        let mut left_shift = 0;
        let left_range = if side == Side::FullLine { 0..REFERENCE_OFFSETS } else { 0..1 };
        for a in left_range {
            let t = reference_trial(p, z, b, l0 - a, r0, inner, side)?;
            if better(&best, &t, |t| t.left_tail) {
                best = t;
                left_shift = a;
            }
            if best.as_ref().is_some_and(|t| t.left_tail < tol * bnorm / 2.0) {
                break;
            }
        }
        for c in 0..REFERENCE_OFFSETS {
            if best.as_ref().is_some_and(|t| t.right_tail < tol * bnorm / 2.0) {
                break;
            }
            let t = reference_trial(p, z, b, l0 - left_shift, r0 + c + 1, inner, side)?;
            if better(&best, &t, |t| t.right_tail) {
                best = t;
            }
        }
        match best {
            None => previous = None,
            Some(t) => {
                let tail = t.left_tail.hypot(t.right_tail);
                let change = previous.as_ref().map(|(pl, px)| {
                    px.iter()
                        .enumerate()
                        .map(|(i, v)| {
                            let k = pl + i as i64 - t.l;
                            let w = if k >= 0 && (k as usize) < t.x.len() { t.x[k as usize] } else { 0.0 };
                            (v - w).powi(2)
                        })
                        .sum::<f64>()
                        .sqrt()
                });
                if tail < tol * bnorm && change.is_some_and(|c| c < tol * bnorm) {
                    let r = t.l + t.x.len() as i64 - 1;
                    let rhs = b.window(t.l, r);
                    let a: Vec<f64> = p.window_f64(t.l, r).into_iter().map(|v| v - z).collect();
                    let res: Vec<f64> = apply_section(&a, &t.x).iter().zip(&rhs).map(|(u, v)| u - v).collect();
                    return Ok(Reference {
                        start: t.l,
                        size: t.x.len(),
                        residual: norm(&res),
                        tail_mass: tail / bnorm,
                        change: change.unwrap_or(0.0) / bnorm,
                        values: t.x,
                    });
                }
                previous = Some((t.l, t.x));
            }
        }
        pad *= 2;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FsmRow {
    pub n: usize,
    pub l: i64,
    pub r: i64,
    pub invertible: bool,
    pub sigma_min: f64,
    /// `1 / sigma_min`; `None` for singular sections.
    pub inverse_norm: Option<f64>,
    /// `||x_n - x_ref||_2` with `x_n` extended by zero; `None` when the
    /// section could not be solved or no reference exists.
    pub solution_error: Option<f64>,
    /// `||(H - zI)_{l..r} x_n - b||_2`, recomputed by multiplication.
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum FsmVerdict {
    ApplicableObserved,
    FailureObserved { reason: String, witness_row: usize },
    Inconclusive { reason: String },
}

impl FsmVerdict {
    pub fn name(&self) -> &'static str {
        match self {
            FsmVerdict::ApplicableObserved => "applicable_observed",
            FsmVerdict::FailureObserved { .. } => "failure_observed",
            FsmVerdict::Inconclusive { .. } => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceMeta {
    pub start: i64,
    pub size: usize,
    pub residual: f64,
    pub tail_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FsmReport {
    pub side: Side,
    pub z: f64,
    pub rows: Vec<FsmRow>,
    pub verdict: FsmVerdict,
    pub reference: Option<ReferenceMeta>,
}

impl FsmReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// CSV with columns `n,l,r,invertible,sigma_min,inverse_norm,solution_error,residual`;
    /// missing values are empty.
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
        let mut out = String::from("n,l,r,invertible,sigma_min,inverse_norm,solution_error,residual\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{:?},{},{},{}",
                r.n,
                r.l,
                r.r,
                r.invertible,
                r.sigma_min,
                opt(r.inverse_norm),
                opt(r.solution_error),
                opt(r.residual)
            );
        }
        out
    }
}

/// Reference-solution settings for [`run_fsm_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FsmOptions {
    pub reference_tol: f64,
    pub reference_cap: usize,
}

impl Default for FsmOptions {
    fn default() -> Self {
        FsmOptions { reference_tol: REFERENCE_TOL, reference_cap: REFERENCE_SIZE_CAP }
    }
}

pub fn run_fsm(p: &Potential, scheme: &SectionScheme, z: f64, b: &CompactVector) -> Result<FsmReport> {
    run_fsm_with(p, scheme, z, b, FsmOptions::default())
}

/// Solve every section of `scheme`, measure errors against the reference and
/// classify the run.
pub fn run_fsm_with(p: &Potential, scheme: &SectionScheme, z: f64, b: &CompactVector, opts: FsmOptions) -> Result<FsmReport> {
    let sections = scheme.sections()?;
    let reference = match reference_solution(p, scheme.side, z, b, opts.reference_tol, opts.reference_cap) {
        Ok(r) => Some(r),
        Err(Error::Inconclusive(reason)) => {
            let rows = compute_rows(p, &sections, z, b, None)?;
            let verdict = divergence_witness(&rows)
                .unwrap_or(FsmVerdict::Inconclusive { reason: format!("reference solution: {reason}") });
            return Ok(FsmReport { side: scheme.side, z, rows, verdict, reference: None });
        }
        Err(e) => return Err(e),
    };
    let rows = compute_rows(p, &sections, z, b, reference.as_ref())?;
    let verdict = classify(&rows, 10.0 * opts.reference_tol * b.norm());
    Ok(FsmReport {
        side: scheme.side,
        z,
        rows,
        verdict,
        reference: reference.map(|r| ReferenceMeta {
            start: r.start,
            size: r.size,
            residual: r.residual,
            tail_mass: r.tail_mass,
        }),
    })
}

fn compute_rows(
    p: &Potential,
    sections: &[(i64, i64)],
    z: f64,
    b: &CompactVector,
    reference: Option<&Reference>,
) -> Result<Vec<FsmRow>> {
    sections
        .par_iter()
        .enumerate()
        .map(|(n, &(l, r))| {
            let sigma_min = smallest_singular_value(p, l, r, z)?;
            let rhs = b.window(l, r);
            let solved = if sigma_min > 0.0 && norm(&rhs) > 0.0 {
                match solve_section(p, z, l, r, &rhs) {
                    Ok(x) => Some(x),
                    Err(Error::SingularSection { .. }) => None,
                    Err(e) => return Err(e),
                }
            } else if sigma_min > 0.0 {
                Some(vec![0.0; rhs.len()])
            } else {
                None
            };
            let residual = solved.as_ref().map(|x| {
                let a: Vec<f64> = p.window_f64(l, r).into_iter().map(|v| v - z).collect();
                let res: Vec<f64> = apply_section(&a, x).iter().zip(&rhs).map(|(u, v)| u - v).collect();
                norm(&res)
            });
            let solution_error = match (&solved, reference) {
                (Some(x), Some(rf)) => {
                    let (lo, hi) = (l.min(rf.start), r.max(rf.end()));
                    let err = (lo..=hi)
                        .map(|k| {
                            let xn = if k >= l && k <= r { x[(k - l) as usize] } else { 0.0 };
                            (xn - rf.get(k)).powi(2)
                        })
                        .sum::<f64>()
                        .sqrt();
                    Some(err)
                }
                _ => None,
            };
            Ok(FsmRow {
                n,
                l,
                r,
                invertible: sigma_min > 0.0,
                sigma_min,
                inverse_norm: (sigma_min > 0.0).then(|| 1.0 / sigma_min),
                solution_error,
                residual,
            })
        })
        .collect()
}

/// First singular or divergent section after the burn-in rows; needs no
/// reference.
fn divergence_witness(rows: &[FsmRow]) -> Option<FsmVerdict> {
    rows.iter().skip(BURN_IN_ROWS).find_map(|r| {
        if !r.invertible {
            Some(FsmVerdict::FailureObserved { reason: "singular section".into(), witness_row: r.n })
        } else if r.inverse_norm.is_some_and(|v| v > DIVERGENCE_THRESHOLD) {
            Some(FsmVerdict::FailureObserved {
                reason: format!("inverse norm exceeds {DIVERGENCE_THRESHOLD:e}"),
                witness_row: r.n,
            })
        } else {
            None
        }
    })
}

/// Verdict thresholds: after the first [`BURN_IN_ROWS`] rows every section
/// must be invertible with inverse norm below [`DIVERGENCE_THRESHOLD`], and
/// no error may exceed [`ERROR_FLUCTUATION`] times the smallest earlier one
/// plus the reference noise floor; the run is applicable when
/// the final error is below [`CONVERGED_ERROR`] and inverse norms over the
/// trailing half vary by less than [`INVERSE_NORM_SPREAD`].
fn classify(rows: &[FsmRow], noise_floor: f64) -> FsmVerdict {
    if let Some(v) = divergence_witness(rows) {
        return v;
    }
    let tail = &rows[BURN_IN_ROWS.min(rows.len().saturating_sub(1))..];
    if let Some(r) = tail.iter().find(|r| r.solution_error.is_none()) {
        return FsmVerdict::FailureObserved { reason: "section solve failed".into(), witness_row: r.n };
    }
    let errors: Vec<f64> = tail.iter().map(|r| r.solution_error.unwrap_or(f64::INFINITY)).collect();
    let last = *errors.last().expect("nonempty scheme");
    let mut smallest = f64::INFINITY;
    let monotone = errors.iter().all(|&e| {
        let ok = e <= ERROR_FLUCTUATION * smallest + noise_floor;
        smallest = smallest.min(e);
        ok
    });
    let half = &rows[rows.len() / 2..];
    let norms: Vec<f64> = half.iter().filter_map(|r| r.inverse_norm).collect();
    let spread = norms.iter().cloned().fold(0.0, f64::max) / norms.iter().cloned().fold(f64::INFINITY, f64::min);
    if last >= CONVERGED_ERROR {
        let trailing: Vec<f64> = half.iter().map(|r| r.solution_error.unwrap_or(f64::INFINITY)).collect();
        if trailing.windows(2).all(|w| w[1] >= w[0]) && trailing.len() >= 2 {
            return FsmVerdict::FailureObserved {
                reason: "error non-decreasing over the trailing half".into(),
                witness_row: half[half.len() - 1].n,
            };
        }
        return FsmVerdict::Inconclusive { reason: format!("final error {last:e} not below {CONVERGED_ERROR:e}") };
    }
    if !monotone {
        return FsmVerdict::Inconclusive { reason: "errors not monotone after the burn-in rows".into() };
    }
    if spread >= INVERSE_NORM_SPREAD {
        return FsmVerdict::Inconclusive { reason: format!("inverse-norm spread {spread:.3} over the trailing half") };
    }
    FsmVerdict::ApplicableObserved
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TailBehavior {
    BoundedBelow,
    GeometricDecay,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityRow {
    pub n: usize,
    pub l: i64,
    pub r: i64,
    pub size: usize,
    pub sigma_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityScan {
    pub rows: Vec<StabilityRow>,
    pub behavior: TailBehavior,
    /// Fitted `sigma_min` ratio per added site, per row and per period
    /// (periodic potentials); descriptive only.
    pub ratio_per_site: Option<f64>,
    pub ratio_per_row: Option<f64>,
    pub ratio_per_period: Option<f64>,
    /// Smallest nonzero `sigma_min` over the trailing half.
    pub tail_lower_bound: Option<f64>,
    pub singular_rows: usize,
}

impl StabilityScan {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,l,r,size,sigma_min\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{},{:?}", r.n, r.l, r.r, r.size, r.sigma_min);
        }
        out
    }
}

/// Slope magnitude (per site) of `ln sigma_min` separating decay from a
/// bounded tail.
const DECAY_SLOPE: f64 = 1e-3;

/// `sigma_min` per section and a least-squares fit of `ln sigma_min` against
/// section size over the trailing half of the nonsingular rows.
pub fn stability_scan(p: &Potential, scheme: &SectionScheme, z: f64) -> Result<StabilityScan> {
    let sections = scheme.sections()?;
    let rows: Vec<StabilityRow> = sections
        .par_iter()
        .enumerate()
        .map(|(n, &(l, r))| {
            Ok(StabilityRow { n, l, r, size: (r - l + 1) as usize, sigma_min: smallest_singular_value(p, l, r, z)? })
        })
        .collect::<Result<_>>()?;
    let singular_rows = rows.iter().filter(|r| r.sigma_min == 0.0).count();
    let nonzero: Vec<&StabilityRow> = rows.iter().filter(|r| r.sigma_min > 0.0).collect();
    let trailing = &nonzero[nonzero.len() / 2..];
    let pts: Vec<(f64, f64)> = trailing.iter().map(|r| (r.size as f64, r.sigma_min.ln())).collect();
    let slope = least_squares_slope(&pts);
    let behavior = match slope {
        None => TailBehavior::Undetermined,
        Some(s) if s < -DECAY_SLOPE => TailBehavior::GeometricDecay,
        Some(_) => TailBehavior::BoundedBelow,
    };
    let row_step = if trailing.len() >= 2 {
        Some((trailing[trailing.len() - 1].size - trailing[0].size) as f64 / (trailing.len() - 1) as f64)
    } else {
        None
    };
    Ok(StabilityScan {
        behavior,
        ratio_per_site: slope.map(f64::exp),
        ratio_per_row: slope.zip(row_step).map(|(s, d)| (s * d).exp()),
        ratio_per_period: slope.zip(p.period()).map(|(s, per)| (s * per as f64).exp()),
        tail_lower_bound: trailing.iter().map(|r| r.sigma_min).reduce(f64::min),
        singular_rows,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactalg::finite_section_determinant;
    use crate::scalar::{Regime, Scalar};
    use proptest::prelude::*;

    fn example_1() -> Potential {
        Potential::periodic(
            vec![Scalar::ratio(1, 2), Scalar::int(2), Scalar::ratio(1, 2)],
            Regime::Rational,
        )
        .unwrap()
    }

    fn arithmetic(start: i64, step: i64) -> Sequence {
        Sequence::Arithmetic { start, step }
    }

    #[test]
    fn scheme_validation() {
        let s = SectionScheme::half_line(arithmetic(4, 3), Some(4));
        assert_eq!(s.sections().unwrap(), vec![(0, 4), (0, 7), (0, 10), (0, 13)]);
        let s = SectionScheme::full_line(Sequence::Geometric { start: -2, ratio: 2.0 }, arithmetic(1, 1), Some(3));
        assert_eq!(s.sections().unwrap(), vec![(-2, 1), (-4, 2), (-8, 3)]);
        assert!(SectionScheme::half_line(arithmetic(4, 0), Some(3)).sections().is_err());
        assert!(SectionScheme::half_line(arithmetic(4, 1), None).sections().is_err());
        assert!(SectionScheme::full_line(arithmetic(0, 1), arithmetic(1, 1), Some(3)).sections().is_err());
        assert!(SectionScheme::half_line(Sequence::Explicit { values: vec![-1, 3] }, None).sections().is_err());
        let json = r#"{"side":"full_line","cutoffs":{"left":{"kind":"explicit","values":[-1,-5,-6]},"right":{"kind":"arithmetic","start":2,"step":4}}}"#;
        let s: SectionScheme = serde_json::from_str(json).unwrap();
        assert_eq!(s.sections().unwrap(), vec![(-1, 2), (-5, 6), (-6, 10)]);
    }

    #[test]
    fn two_by_two_solve() {
        let x = solve_section(&Potential::periodic_int(&[4]), 0.0, 0, 1, &[1.0, 0.0]).unwrap();
        assert!((x[0] - 4.0 / 15.0).abs() < 1e-15);
    }

    #[test]
    fn constant_sections_match_continuants() {
        // x_0 = d_{m-2} / d_{m-1} on [0, m-1]
        let p = Potential::periodic_int(&[4]);
        for m in 2..30i64 {
            let mut b = vec![0.0; m as usize];
            b[0] = 1.0;
            let x = solve_section(&p, 0.0, 0, m - 1, &b).unwrap();
            let num = finite_section_determinant(&p, &Scalar::int(0), 1, m - 1).unwrap().to_f64();
            let den = finite_section_determinant(&p, &Scalar::int(0), 0, m - 1).unwrap().to_f64();
            assert!((x[0] - num / den).abs() < 1e-14);
        }
    }

    #[test]
    fn odd_free_sections_are_singular() {
        let p = Potential::periodic_int(&[0]);
        for m in (1..40i64).step_by(2) {
            let b: Vec<f64> = (0..m).map(|i| (i as f64).sin() + 0.3).collect();
            assert!(matches!(solve_section(&p, 0.0, 0, m - 1, &b), Err(Error::SingularSection { .. })));
        }
    }

    #[test]
    fn givens_handles_zero_pivots() {
        // v = 0 at even size: first pivot is zero, the matrix is invertible
        let p = Potential::periodic_int(&[0]);
        let y: Vec<f64> = (0..10).map(|i| 1.0 + i as f64).collect();
        let a = vec![0.0; 10];
        let b = apply_section(&a, &y);
        let x = solve_section(&p, 0.0, 0, 9, &b).unwrap();
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn references_for_constant_potential() {
        let p = Potential::periodic_int(&[4]);
        let half = reference_solution(&p, Side::HalfLine, 0.0, &CompactVector::unit(0), 1e-13, 1 << 20).unwrap();
        assert!((half.get(0) - (2.0 - 3f64.sqrt())).abs() < 1e-12);
        assert!(half.get(0) > 0.26 && half.get(0) < 0.27);
        let full = reference_solution(&p, Side::FullLine, 0.0, &CompactVector::unit(0), 1e-13, 1 << 20).unwrap();
        assert!((full.get(0) - 1.0 / 12f64.sqrt()).abs() < 1e-12);
        assert!(full.residual < 1e-12);
    }

    #[test]
    fn reference_for_example_1_and_failure_for_free() {
        let r = reference_solution(&example_1(), Side::FullLine, 0.0, &CompactVector::unit(0), 1e-13, 1 << 20);
        assert!(r.is_ok());
        let r = reference_solution(&Potential::periodic_int(&[0]), Side::FullLine, 0.0, &CompactVector::unit(0), 1e-13, 1 << 16);
        assert!(matches!(r, Err(Error::Inconclusive(_))));
    }

    #[test]
    fn fsm_constant_applicable() {
        let p = Potential::periodic_int(&[4]);
        let s = SectionScheme::full_line(arithmetic(-2, -3), arithmetic(3, 2), Some(25));
        let rep = run_fsm(&p, &s, 0.0, &CompactVector::unit(0)).unwrap();
        assert_eq!(rep.verdict, FsmVerdict::ApplicableObserved, "{:?}", rep.verdict);
        assert!(rep.rows.iter().all(|r| r.inverse_norm.unwrap() < 0.5));
        assert!(rep.to_csv().lines().count() == 26);
    }

    #[test]
    fn fsm_example_1_half_line_fails() {
        let s = SectionScheme::half_line(arithmetic(2, 3), Some(40));
        let rep = run_fsm(&example_1(), &s, 0.0, &CompactVector::unit(0)).unwrap();
        assert!(matches!(rep.verdict, FsmVerdict::FailureObserved { .. }), "{:?}", rep.verdict);
        let scan = stability_scan(&example_1(), &s, 0.0).unwrap();
        assert_eq!(scan.behavior, TailBehavior::GeometricDecay);
        assert!((scan.ratio_per_period.unwrap() - 0.5).abs() < 0.05);
    }

    #[test]
    fn stability_examples() {
        let s = SectionScheme::half_line(arithmetic(0, 1), Some(40));
        let scan = stability_scan(&Potential::periodic_int(&[4]), &s, 0.0).unwrap();
        assert_eq!(scan.behavior, TailBehavior::BoundedBelow);
        assert!(scan.tail_lower_bound.unwrap() > 2.0);
        let scan = stability_scan(&Potential::periodic_int(&[0]), &s, 0.0).unwrap();
        for r in &scan.rows {
            assert_eq!(r.sigma_min == 0.0, r.size % 2 == 1);
        }
        assert_eq!(scan.singular_rows, 20);
    }

    #[test]
    fn singular_rows_match_exact_determinants() {
        for w in [&[0][..], &[1, -1], &[0, 2, 0], &[1, 1, -2, 0], &[2, -1, 1]] {
            let p = Potential::periodic_int(w);
            for z in -3..=3 {
                let s = SectionScheme::full_line(arithmetic(-1, -1), arithmetic(0, 1), Some(20));
                let scan = stability_scan(&p, &s, z as f64).unwrap();
                for r in &scan.rows {
                    let det = finite_section_determinant(&p, &Scalar::int(z), r.l, r.r).unwrap();
                    assert_eq!(r.sigma_min == 0.0, det.is_zero(), "{w:?} z={z} [{}, {}]", r.l, r.r);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn solves_are_consistent(w in prop::collection::vec(-40i64..=40, 1..6), l in -20i64..20, m in 1i64..80, seed in 0u64..1000, z in -3.0f64..3.0) {
            let p = Potential::periodic(w.iter().map(|&x| Scalar::ratio(x, 7)).collect(), Regime::Rational).unwrap();
            let r = l + m - 1;
            let y: Vec<f64> = (0..m).map(|i| ((seed as f64 + 1.0) * (i as f64 + 0.5)).sin()).collect();
            let a: Vec<f64> = p.window_f64(l, r).into_iter().map(|v| v - z).collect();
            let b = apply_section(&a, &y);
            let sigma = smallest_singular_value(&p, l, r, z).unwrap();
            prop_assume!(sigma > 1e-3);
            let x = solve_section(&p, z, l, r, &b).unwrap();
            let scale = 1.0 / sigma;
            for (u, v) in x.iter().zip(&y) {
                prop_assert!((u - v).abs() < 1e-10 * scale.max(1.0));
            }
        }
    }
}
