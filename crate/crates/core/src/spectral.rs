//! Bands, gaps and Dirichlet eigenvalues of periodic operators, and spectra of
//! finite symmetric tridiagonal sections.

use std::cmp::Ordering;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exactalg::{
    discriminant, finite_section_determinant, monodromy_dirichlet_test, Discriminant,
    MonodromyCertificate, MonodromyVerdict,
};
use crate::poly::{dyadic_width, Poly, RootInterval, SturmChain};
use crate::potential::Potential;
use crate::scalar::{rational_to_f64, Regime, Scalar};

/// Default width of exact band-edge enclosures.
pub const DEFAULT_EDGE_WIDTH: f64 = 1e-12;
/// Absolute accuracy of truncation eigenvalues.
pub const EIGENVALUE_TOL: f64 = 1e-12;
/// Truncation eigenvalues within this distance of a band count as in-band.
pub const BAND_MARGIN: f64 = 1e-8;
/// Width of in-gap clusters in pollution reports.
pub const CLUSTER_WIDTH: f64 = 1e-4;
/// Maximum distance between a Dirichlet eigenvalue and its truncation witness.
pub const CROSS_VALIDATION_TOL: f64 = 1e-6;

/// Sections up to this size get exact determinant checks in
/// [`smallest_singular_value`].
const EXACT_SECTION_CAP: i64 = 4096;

fn q(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// A band edge: float value plus an exact rational enclosure `(lo, hi]`
/// (degenerate when the edge is rational and was hit exactly).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Edge {
    pub value: f64,
    pub enclosure: [Scalar; 2],
}

impl Edge {
    fn from_interval(iv: &RootInterval) -> Edge {
        Edge {
            value: iv.midpoint_f64(),
            enclosure: [Scalar::Rat(iv.lo.clone()), Scalar::Rat(iv.hi.clone())],
        }
    }

    pub fn lo(&self) -> BigRational {
        self.enclosure[0].to_rational().expect("rational enclosure")
    }

    pub fn hi(&self) -> BigRational {
        self.enclosure[1].to_rational().expect("rational enclosure")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Band {
    pub lo: Edge,
    pub hi: Edge,
}

/// Open bounded interval between two consecutive bands.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gap {
    pub id: usize,
    pub lo: f64,
    pub hi: f64,
}

/// `{z : |Delta(z)| <= 2}` as disjoint closed intervals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandSet {
    pub period: usize,
    pub bands: Vec<Band>,
    pub gaps: Vec<Gap>,
    pub edge_width: f64,
    pub discriminant: Poly,
}

/// Where a spectral parameter sits relative to a band set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "location", content = "gap")]
pub enum Location {
    Band,
    Gap(usize),
    Below,
    Above,
}

impl BandSet {
    /// Exact membership of a rational point.
    pub fn contains_exact(&self, z: &BigRational) -> bool {
        self.discriminant.eval(z).abs() <= q(2)
    }

    /// Exact sign of `|Delta(z)| - 2`.
    pub fn band_test(&self, z: &BigRational) -> Ordering {
        self.discriminant.eval(z).abs().cmp(&q(2))
    }

    /// Float classification against the band edges.
    pub fn locate(&self, z: f64) -> Location {
        match (self.bands.first(), self.bands.last()) {
            (Some(first), _) if z < first.lo.value => return Location::Below,
            (_, Some(last)) if z > last.hi.value => return Location::Above,
            (None, _) => return Location::Below,
            _ => {}
        }
        if self.bands.iter().any(|b| b.lo.value <= z && z <= b.hi.value) {
            return Location::Band;
        }
        let g = self.gaps.iter().find(|g| g.lo < z && z < g.hi).expect("gaps cover the complement");
        Location::Gap(g.id)
    }

    /// Distance from `z` to the band set.
    pub fn distance(&self, z: f64) -> f64 {
        self.bands
            .iter()
            .map(|b| {
                if z < b.lo.value {
                    b.lo.value - z
                } else if z > b.hi.value {
                    z - b.hi.value
                } else {
                    0.0
                }
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn intervals(&self) -> Vec<(f64, f64)> {
        self.bands.iter().map(|b| (b.lo.value, b.hi.value)).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("band sets serialize")
    }

    /// CSV with columns `kind,id,lo,hi`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,id,lo,hi\n");
        for (i, b) in self.bands.iter().enumerate() {
            let _ = writeln!(out, "band,{i},{:?},{:?}", b.lo.value, b.hi.value);
        }
        for g in &self.gaps {
            let _ = writeln!(out, "gap,{},{:?},{:?}", g.id, g.lo, g.hi);
        }
        out
    }
}

/// Real roots of `f`, each in an enclosure no wider than `width`; errors if
/// `f` has non-real roots.
fn real_roots(f: &Poly, width: &BigRational, what: &str) -> Result<Vec<RootInterval>> {
    let chain = SturmChain::new(f);
    let roots = chain.isolate_all(width);
    let distinct = chain.base().degree().unwrap_or(0);
    if roots.len() != distinct {
        return Err(Error::NonRealRoots(format!(
            "{what} has {distinct} distinct roots but only {} are real",
            roots.len()
        )));
    }
    Ok(roots)
}

/// Shrink two enclosures of distinct roots until they are disjoint.
fn separate(a: &mut RootInterval, ca: &SturmChain, b: &mut RootInterval, cb: &SturmChain) {
    let mut width = a.width().max(b.width());
    while !(a.hi < b.lo || b.hi < a.lo) {
        width = width / q(2);
        *a = ca.refine(a.clone(), &width);
        *b = cb.refine(b.clone(), &width);
        if a.is_exact() && b.is_exact() {
            break;
        }
    }
}

/// Bands with the default edge width.
pub fn bands(d: &Discriminant) -> Result<BandSet> {
    bands_with_width(d, DEFAULT_EDGE_WIDTH)
}

/// Band edges are the real roots of `Delta - 2` and `Delta + 2`; the sign of
/// `|Delta| - 2` at exact probes between consecutive edges decides which
/// segments are bands.
pub fn bands_with_width(d: &Discriminant, width: f64) -> Result<BandSet> {
    let w = dyadic_width(width);
    let minus = d.shifted(2);
    let plus = d.shifted(-2);
    let (cm, cp) = (SturmChain::new(&minus), SturmChain::new(&plus));
    let mut edges: Vec<(RootInterval, bool)> = real_roots(&minus, &w, "Delta - 2")?
        .into_iter()
        .map(|iv| (iv, true))
        .chain(real_roots(&plus, &w, "Delta + 2")?.into_iter().map(|iv| (iv, false)))
        .collect();
    edges.sort_by(|a, b| a.0.lo.cmp(&b.0.lo));
    for i in 1..edges.len() {
        if edges[i - 1].1 != edges[i].1 {
            let (left, right) = edges.split_at_mut(i);
            let (a, ia) = &mut left[i - 1];
            let (b, _) = &mut right[0];
            let (ca, cb) = if *ia { (&cm, &cp) } else { (&cp, &cm) };
            separate(a, ca, b, cb);
        }
    }
    edges.sort_by(|a, b| a.0.lo.cmp(&b.0.lo));

    // Segment k lies between edge k-1 and edge k; both unbounded segments are gaps.
    let in_band: Vec<bool> = (1..edges.len())
        .map(|k| {
            let probe = (&edges[k - 1].0.hi + &edges[k].0.lo) / q(2);
            d.band_test(&probe) != Ordering::Greater
        })
        .collect();

    let mut out: Vec<Band> = Vec::new();
    let mut open: Option<Edge> = None;
    for (k, (iv, _)) in edges.iter().enumerate() {
        let left_in = k > 0 && in_band[k - 1];
        let right_in = k + 1 < edges.len() && in_band[k];
        let edge = Edge::from_interval(iv);
        match (left_in, right_in) {
            (false, true) => open = Some(edge),
            (true, false) => out.push(Band { lo: open.take().expect("band opened"), hi: edge }),
            (false, false) => out.push(Band { lo: edge.clone(), hi: edge }),
            (true, true) => {}
        }
    }
    let gaps = out
        .windows(2)
        .enumerate()
        .map(|(id, w)| Gap { id, lo: w[0].hi.value, hi: w[1].lo.value })
        .collect();
    Ok(BandSet {
        period: d.period,
        bands: out,
        gaps,
        edge_width: rational_to_f64(&w),
        discriminant: d.coefficients.clone(),
    })
}

/// Convenience: discriminant plus bands of a periodic potential.
pub fn periodic_bands(p: &Potential) -> Result<BandSet> {
    bands(&discriminant(p)?)
}

/// A Dirichlet eigenvalue of the half-line compression.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirichletEigenvalue {
    pub value: f64,
    pub enclosure: [Scalar; 2],
    /// Half-width of the enclosure.
    pub residual_bound: f64,
    pub gap: Location,
    /// `M22` at the enclosure midpoint, `|M22| < 1` certified exactly.
    pub m22: f64,
}

/// A root of `M12` where `|Delta| = 2`: the decay criterion degenerates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryCase {
    pub value: f64,
    pub enclosure: [Scalar; 2],
    /// Read as a gap-closure point: does the decay criterion `|M22| < 1`
    /// hold? (`det M = 1` forces `|M22| = 1` here, so only float noise can
    /// make this true.)
    pub dirichlet_if_gap: bool,
    /// Read as a band point: always in the spectrum.
    pub in_band: bool,
    pub m22: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossValidation {
    pub eigenvalue: f64,
    pub truncation_size: usize,
    pub nearest_truncation_eigenvalue: Option<f64>,
    pub distance: f64,
    pub same_gap: bool,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirichletSpectrumReport {
    pub bands: BandSet,
    pub eigenvalues: Vec<DirichletEigenvalue>,
    pub boundary_cases: Vec<BoundaryCase>,
    /// Roots of `M12` inside gaps with `|M22| > 1` (eigenvalues of the
    /// left half-line instead).
    pub rejected_roots: Vec<f64>,
    pub cross_validation: Vec<CrossValidation>,
    /// Exact certificates for every integer `z` in a gap, integer potentials only.
    pub integer_certificates: Vec<MonodromyCertificate>,
    /// Violations of "at most one eigenvalue per gap" and failed
    /// cross-validations; never fatal.
    pub diagnostics: Vec<String>,
}

impl DirichletSpectrumReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn cross_validated(&self) -> bool {
        self.cross_validation.iter().all(|c| c.ok)
    }
}

/// Refine `iv` (a simple root of `chain`) until none of `others` has a root
/// in it, or it collapses to a point. No `other` may vanish at the root.
fn clear_of(iv: &mut RootInterval, chain: &SturmChain, others: &[&SturmChain]) {
    let mut width = iv.width();
    loop {
        if iv.is_exact() || others.iter().all(|c| c.count(&iv.lo, &iv.hi) == 0) {
            return;
        }
        width = width / q(2);
        *iv = chain.refine(iv.clone(), &width);
    }
}

/// Sign of `f` on an enclosure on which it has no root.
fn sign_on(f: &Poly, iv: &RootInterval) -> Ordering {
    if iv.is_exact() {
        f.sign_at(&iv.lo)
    } else {
        f.sign_at(&iv.midpoint())
    }
}

/// Dirichlet eigenvalues of the half-line compression of a periodic
/// potential: roots of `M12` in gap closures with `|M22| < 1`.
pub fn dirichlet_eigenvalues(p: &Potential, bs: &BandSet) -> Result<DirichletSpectrumReport> {
    let d = discriminant(p)?;
    let w = dyadic_width(bs.edge_width.max(f64::MIN_POSITIVE));
    let m = &d.monodromy;
    let mut eigenvalues = Vec::new();
    let mut boundary_cases = Vec::new();
    let mut rejected_roots = Vec::new();

    if !m.m12.is_zero() && m.m12.degree().unwrap_or(0) > 0 {
        let c12 = SturmChain::new(&m.m12);
        let minus = d.shifted(2);
        let plus = d.shifted(-2);
        let edge_poly = minus.mul(&plus);
        let touching = SturmChain::new(&m.m12.gcd(&edge_poly));
        let c_edge = SturmChain::new(&edge_poly);
        let m22m = m.m22.sub(&Poly::from_i64(&[1]));
        let m22p = m.m22.add(&Poly::from_i64(&[1]));
        let (c22m, c22p) = (SturmChain::new(&m22m), SturmChain::new(&m22p));
        for mut iv in c12.isolate_all(&w) {
            if touching.base().degree().unwrap_or(0) > 0 && touching.count(&iv.lo, &iv.hi) > 0 {
                let value = iv.midpoint_f64();
                let m22 = m.m22.eval_f64(value);
                boundary_cases.push(BoundaryCase {
                    value,
                    enclosure: [Scalar::Rat(iv.lo.clone()), Scalar::Rat(iv.hi.clone())],
                    dirichlet_if_gap: m22.abs() < 1.0,
                    in_band: true,
                    m22,
                });
                continue;
            }
            clear_of(&mut iv, &c12, &[&c_edge, &c22m, &c22p]);
            let probe = if iv.is_exact() { iv.lo.clone() } else { iv.midpoint() };
            if d.band_test(&probe) != Ordering::Greater {
                continue;
            }
            // |M22| < 1 iff M22 - 1 < 0 < M22 + 1 on the enclosure.
            let below = sign_on(&m22m, &iv) == Ordering::Less && sign_on(&m22p, &iv) == Ordering::Greater;
            let value = iv.midpoint_f64();
            if !below {
                rejected_roots.push(value);
                continue;
            }
            eigenvalues.push(DirichletEigenvalue {
                value,
                residual_bound: rational_to_f64(&iv.width()) / 2.0,
                gap: bs.locate(value),
                m22: m.m22.eval_f64(value),
                enclosure: [Scalar::Rat(iv.lo), Scalar::Rat(iv.hi)],
            });
        }
    }

    let mut diagnostics = Vec::new();
    for g in &bs.gaps {
        let k = eigenvalues.iter().filter(|e| e.gap == Location::Gap(g.id)).count();
        if k > 1 {
            diagnostics.push(format!("gap {} holds {k} Dirichlet eigenvalues", g.id));
        }
    }
    for e in &eigenvalues {
        if !matches!(e.gap, Location::Gap(_)) {
            diagnostics.push(format!("Dirichlet eigenvalue {:?} outside every bounded gap", e.value));
        }
    }

    let cross_validation = cross_validate(p, bs, &eigenvalues)?;
    for c in cross_validation.iter().filter(|c| !c.ok) {
        diagnostics.push(format!(
            "eigenvalue {:?} not matched by a truncation eigenvalue (distance {:e})",
            c.eigenvalue, c.distance
        ));
    }

    let integer_certificates = if p.is_integer_valued() {
        integer_gap_certificates(p, bs)?
    } else {
        Vec::new()
    };
    for c in &integer_certificates {
        if c.is_dirichlet() {
            diagnostics.push(format!("integer z = {} certified as a Dirichlet eigenvalue", c.z));
        }
    }

    Ok(DirichletSpectrumReport {
        bands: bs.clone(),
        eigenvalues,
        boundary_cases,
        rejected_roots,
        cross_validation,
        integer_certificates,
        diagnostics,
    })
}

/// Every reported eigenvalue must have a half-line truncation eigenvalue
/// within [`CROSS_VALIDATION_TOL`] in the same gap. Truncations start at
/// `max(60 p, 300)` sites and double while the match is missing, up to
/// 64 times that size (narrow gaps decay slowly).
fn cross_validate(p: &Potential, bs: &BandSet, eigs: &[DirichletEigenvalue]) -> Result<Vec<CrossValidation>> {
    let base = (60 * bs.period).max(300);
    eigs.iter()
        .map(|e| {
            let mut size = base;
            loop {
                let diag = p.window_f64(0, size as i64 - 1);
                let near = eigenvalues_in(&diag, e.value - 1e-3, e.value + 1e-3);
                let nearest = near
                    .iter()
                    .copied()
                    .min_by(|a, b| (a - e.value).abs().total_cmp(&(b - e.value).abs()));
                let distance = nearest.map_or(f64::INFINITY, |x| (x - e.value).abs());
                let same_gap = nearest.is_some_and(|x| bs.locate(x) == e.gap);
                let ok = distance < CROSS_VALIDATION_TOL && same_gap;
                if ok || size >= 64 * base {
                    return Ok(CrossValidation {
                        eigenvalue: e.value,
                        truncation_size: size,
                        nearest_truncation_eigenvalue: nearest,
                        distance,
                        same_gap,
                        ok,
                    });
                }
                size *= 2;
            }
        })
        .collect()
}

/// Monodromy certificates for every integer in `[min v - 3, max v + 3]`
/// that lies in a gap.
pub fn integer_gap_certificates(p: &Potential, bs: &BandSet) -> Result<Vec<MonodromyCertificate>> {
    let (lo, hi) = p.bounds_f64();
    let (lo, hi) = (lo.floor() as i64 - 3, hi.ceil() as i64 + 3);
    let mut out = Vec::new();
    for z in lo..=hi {
        if bs.band_test(&q(z)) == Ordering::Greater {
            let c = monodromy_dirichlet_test(p, &Scalar::int(z))?;
            debug_assert_ne!(c.verdict, MonodromyVerdict::NotGap);
            out.push(c);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Symmetric tridiagonal sections with unit off-diagonals.

/// Number of eigenvalues of `tridiag(1, diag, 1)` strictly below `x`, from
/// the inertia of the shifted LDL^T factorization.
pub fn sturm_count(diag: &[f64], x: f64) -> usize {
    let pivmin = f64::MIN_POSITIVE;
    let mut count = 0;
    let mut q = 1.0;
    for (i, &d) in diag.iter().enumerate() {
        q = if i == 0 { d - x } else { (d - x) - 1.0 / q };
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Gershgorin enclosure of the section's spectrum.
fn gershgorin(diag: &[f64]) -> (f64, f64) {
    let (lo, hi) = diag
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &d| (a.min(d), b.max(d)));
    (lo - 2.0, hi + 2.0)
}

/// The `k`-th smallest eigenvalue (0-based), bisected inside `[lo, hi]`.
fn kth_eigenvalue(diag: &[f64], k: usize, mut lo: f64, mut hi: f64) -> f64 {
    while hi - lo > EIGENVALUE_TOL * 0.25 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(diag, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// All eigenvalues of `tridiag(1, diag, 1)`, ascending, each to absolute
/// accuracy [`EIGENVALUE_TOL`].
pub fn tridiagonal_eigenvalues(diag: &[f64]) -> Vec<f64> {
    if diag.is_empty() {
        return Vec::new();
    }
    let (lo, hi) = gershgorin(diag);
    let mut out: Vec<f64> = (0..diag.len())
        .into_par_iter()
        .map(|k| kth_eigenvalue(diag, k, lo, hi))
        .collect();
    // bisection results are monotone in k up to the stopping width; enforce it
    for i in 1..out.len() {
        if out[i] < out[i - 1] {
            out[i] = out[i - 1];
        }
    }
    out
}

/// Eigenvalues in `[a, b)`, ascending.
pub fn eigenvalues_in(diag: &[f64], a: f64, b: f64) -> Vec<f64> {
    if diag.is_empty() || a >= b {
        return Vec::new();
    }
    let (ka, kb) = (sturm_count(diag, a), sturm_count(diag, b));
    (ka..kb).into_par_iter().map(|k| kth_eigenvalue(diag, k, a, b)).collect()
}

fn real_diagonal(p: &Potential, l: i64, r: i64) -> Result<Vec<f64>> {
    if l > r {
        return Err(Error::InvalidRange { l, r });
    }
    if p.regime() == Regime::GaussianInteger {
        return Err(Error::NotInRegime { value: "gaussian potential".into(), regime: Regime::Float });
    }
    Ok(p.window_f64(l, r))
}

/// Eigenvalues of the section `H_{l..r}`, ascending, count `r - l + 1`.
pub fn truncation_spectrum(p: &Potential, l: i64, r: i64) -> Result<Vec<f64>> {
    Ok(tridiagonal_eigenvalues(&real_diagonal(p, l, r)?))
}

/// `sigma_min((H - zI)_{l..r})`, the distance from `z` to the section
/// spectrum.
///
/// Float bisection is accurate to about `1e-13` absolute. For exact
/// potentials two refinements apply: a section whose exact determinant
/// vanishes returns `0.0` exactly, and distances below `1e-6` are
/// re-bisected with an exact integer Sturm count at dyadic points, which
/// keeps relative accuracy far below the float noise floor.
pub fn smallest_singular_value(p: &Potential, l: i64, r: i64, z: f64) -> Result<f64> {
    let diag = real_diagonal(p, l, r)?;
    let (below, above) = adjacent_distances(&diag, z);
    let sigma = below.min(above);
    let exact = p.regime().is_exact() && r - l < EXACT_SECTION_CAP && z.is_finite();
    if !exact || sigma >= 1e-6 {
        return Ok(sigma);
    }
    let zq = BigRational::from_float(z).expect("finite");
    if finite_section_determinant(p, &Scalar::Rat(zq.clone()), l, r)?.is_zero() {
        return Ok(0.0);
    }
    let section = ExactSection::new(p, l, r);
    let c = section.count_below(&zq);
    let mut best = f64::INFINITY;
    for (dir, estimate, exists) in [(-1, below, c > 0), (1, above, c < diag.len())] {
        if !exists {
            continue;
        }
        let d = if estimate < 1e-6 { section.distance(&zq, c, dir, estimate) } else { estimate };
        best = best.min(d);
    }
    Ok(best)
}

/// Distances from `z` to the nearest eigenvalue below and above it
/// (infinite when there is none).
fn adjacent_distances(diag: &[f64], z: f64) -> (f64, f64) {
    let (lo, hi) = gershgorin(diag);
    let below = sturm_count(diag, z);
    let d_below = if below > 0 {
        (z - kth_eigenvalue(diag, below - 1, lo.min(z), z)).abs()
    } else {
        f64::INFINITY
    };
    let d_above = if below < diag.len() {
        (kth_eigenvalue(diag, below, z, hi.max(z)) - z).abs()
    } else {
        f64::INFINITY
    };
    (d_below, d_above)
}

/// A section `tridiag(1, n_i / den, 1)` with integer numerators, for exact
/// inertia counts.
struct ExactSection {
    nums: Vec<BigInt>,
    den: BigInt,
}

impl ExactSection {
    fn new(p: &Potential, l: i64, r: i64) -> ExactSection {
        let vals: Vec<BigRational> = (l..=r).map(|n| p.eval(n).to_rational().expect("exact real")).collect();
        let den = vals.iter().fold(BigInt::from(1), |acc, v| num_integer::Integer::lcm(&acc, v.denom()));
        let nums = vals.iter().map(|v| (v * BigRational::from_integer(den.clone())).to_integer()).collect();
        ExactSection { nums, den }
    }

    /// Number of eigenvalues strictly below the dyadic rational `x`.
    ///
    /// With `x = a / b` and `s = b * den`, the scaled leading minors
    /// `Q_i = s^i det(T_i - x)` obey `Q_i = (n_{i-1} b - a den) Q_{i-1} - s^2 Q_{i-2}`
    /// in integers; sign changes along `Q_0, ..., Q_N` count eigenvalues
    /// below `x`. An exact zero takes the sign opposite to its predecessor.
    fn count_below(&self, x: &BigRational) -> usize {
        let (a, b) = (x.numer(), x.denom());
        let s = b * &self.den;
        let s2 = &s * &s;
        let ad = a * &self.den;
        let mut prev2 = BigInt::zero();
        let mut prev = BigInt::from(1);
        let mut prev_sign = 1i8;
        let mut count = 0;
        for n in &self.nums {
            let c = n * b - &ad;
            let next = &c * &prev - &s2 * &prev2;
            let sign = match next.sign() {
                num_bigint::Sign::Plus => 1,
                num_bigint::Sign::Minus => -1,
                num_bigint::Sign::NoSign => -prev_sign,
            };
            if sign != prev_sign {
                count += 1;
            }
            prev_sign = sign;
            prev2 = std::mem::replace(&mut prev, next);
        }
        count
    }

    /// Distance from `z` to the adjacent eigenvalue on side `dir` (`-1` below,
    /// `+1` above), given `c` eigenvalues below `z` and a float estimate,
    /// to relative accuracy about `1e-10`.
    fn distance(&self, z: &BigRational, c: usize, dir: i64, estimate: f64) -> f64 {
        let probe = |t: &BigRational| {
            let x = if dir < 0 { z - t } else { z + t };
            self.count_below(&x) == c
        };
        let pow2 = |m: i64| BigRational::new(BigInt::from(1), BigInt::from(1) << m as usize);
        // t = 2^-m lies short of the eigenvalue iff probe(t); find m with
        // probe(2^-m) and not probe(2^-(m-1)).
        let mut m = if estimate > 0.0 { (-estimate.log2()).floor() as i64 } else { 40 };
        m = m.clamp(1, 1100);
        if probe(&pow2(m)) {
            while m > 1 && probe(&pow2(m - 1)) {
                m -= 1;
            }
        } else {
            let mut step = 1;
            loop {
                let next = (m + step).min(1100);
                if probe(&pow2(next)) {
                    // short at next, beyond at m: bisect on the exponent
                    let (mut lo, mut hi) = (m, next);
                    while hi - lo > 1 {
                        let mid = (lo + hi) / 2;
                        if probe(&pow2(mid)) {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                    }
                    m = hi;
                    break;
                }
                if next == 1100 {
                    return 0.0;
                }
                m = next;
                step *= 2;
            }
        }
        let (mut lo, mut hi) = (pow2(m), pow2(m - 1));
        let tol = BigRational::new(BigInt::from(1), BigInt::from(1u64 << 34));
        while (&hi - &lo) > &lo * &tol {
            let mid = (&lo + &hi) / BigRational::from_integer(BigInt::from(2));
            if probe(&mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        rational_to_f64(&((lo + hi) / BigRational::from_integer(BigInt::from(2))))
    }
}

// ---------------------------------------------------------------------------
// Spectral pollution.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    InBand,
    InGap,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PollutionRow {
    pub size: usize,
    pub eigenvalue: f64,
    pub classification: Classification,
    pub location: Location,
}

/// In-gap truncation eigenvalues that recur across sizes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PollutionCluster {
    pub center: f64,
    pub location: Location,
    pub sizes: Vec<usize>,
    /// Present at two or more sizes, including the largest.
    pub persistent: bool,
    /// Distance to the nearest integer.
    pub integer_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PollutionReport {
    pub sizes: Vec<usize>,
    pub rows: Vec<PollutionRow>,
    pub clusters: Vec<PollutionCluster>,
    /// `(location, number of persistent clusters)` per gap with candidates.
    pub candidates_per_gap: Vec<(Location, usize)>,
}

impl PollutionReport {
    pub fn persistent(&self) -> impl Iterator<Item = &PollutionCluster> {
        self.clusters.iter().filter(|c| c.persistent)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// CSV with columns `size,eigenvalue,classification,gap_id`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("size,eigenvalue,classification,gap_id\n");
        for r in &self.rows {
            let gap = match r.location {
                Location::Gap(g) => g.to_string(),
                Location::Below => "below".into(),
                Location::Above => "above".into(),
                Location::Band => String::new(),
            };
            let class = match r.classification {
                Classification::InBand => "in_band",
                Classification::InGap => "in_gap",
            };
            let _ = writeln!(out, "{},{:?},{class},{gap}", r.size, r.eigenvalue);
        }
        out
    }
}

/// Classify the eigenvalues of the half-line sections `[0, m - 1]` for each
/// size `m`, then cluster the in-gap ones across sizes.
pub fn pollution_report(p: &Potential, bs: &BandSet, sizes: &[usize]) -> Result<PollutionReport> {
    let mut sizes: Vec<usize> = sizes.iter().copied().filter(|&m| m > 0).collect();
    sizes.sort_unstable();
    sizes.dedup();
    let mut rows = Vec::new();
    for &m in &sizes {
        for x in truncation_spectrum(p, 0, m as i64 - 1)? {
            let (classification, location) = if bs.distance(x) <= BAND_MARGIN {
                (Classification::InBand, Location::Band)
            } else {
                (Classification::InGap, bs.locate(x))
            };
            rows.push(PollutionRow { size: m, eigenvalue: x, classification, location });
        }
    }

    let mut gap_vals: Vec<(f64, usize, Location)> = rows
        .iter()
        .filter(|r| r.classification == Classification::InGap)
        .map(|r| (r.eigenvalue, r.size, r.location))
        .collect();
    gap_vals.sort_by(|a, b| a.0.total_cmp(&b.0));
    let largest = sizes.last().copied();
    let mut clusters: Vec<PollutionCluster> = Vec::new();
    let mut i = 0;
    while i < gap_vals.len() {
        let anchor = gap_vals[i].0;
        let mut j = i;
        while j < gap_vals.len() && gap_vals[j].0 - anchor <= CLUSTER_WIDTH {
            j += 1;
        }
        let members = &gap_vals[i..j];
        let mut cs: Vec<usize> = members.iter().map(|m| m.1).collect();
        cs.sort_unstable();
        cs.dedup();
        let center = members
            .iter()
            .filter(|m| Some(m.1) == largest)
            .map(|m| m.0)
            .next()
            .unwrap_or_else(|| members.iter().map(|m| m.0).sum::<f64>() / members.len() as f64);
        clusters.push(PollutionCluster {
            center,
            location: bs.locate(center),
            persistent: cs.len() >= 2 && cs.last().copied() == largest,
            sizes: cs,
            integer_distance: (center - center.round()).abs(),
        });
        i = j;
    }

    let mut candidates_per_gap: Vec<(Location, usize)> = Vec::new();
    for c in clusters.iter().filter(|c| c.persistent) {
        match candidates_per_gap.iter_mut().find(|e| e.0 == c.location) {
            Some(e) => e.1 += 1,
            None => candidates_per_gap.push((c.location, 1)),
        }
    }
    Ok(PollutionReport { sizes, rows, clusters, candidates_per_gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactalg::discriminant;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn example_1() -> Potential {
        Potential::periodic(
            vec![Scalar::ratio(1, 2), Scalar::int(2), Scalar::ratio(1, 2)],
            Regime::Rational,
        )
        .unwrap()
    }

    fn band_pairs(bs: &BandSet) -> Vec<(f64, f64)> {
        bs.intervals()
    }

    #[test]
    fn free_and_shifted_bands() {
        let bs = periodic_bands(&Potential::periodic_int(&[0])).unwrap();
        assert_eq!(band_pairs(&bs), vec![(-2.0, 2.0)]);
        assert!(bs.bands[0].lo.enclosure[0] == bs.bands[0].lo.enclosure[1]);
        let bs = periodic_bands(&Potential::periodic_int(&[4])).unwrap();
        assert_eq!(band_pairs(&bs), vec![(2.0, 6.0)]);
        assert!(bs.gaps.is_empty());
    }

    #[test]
    fn example_1_bands() {
        let bs = periodic_bands(&example_1()).unwrap();
        assert_eq!(bs.bands.len(), 3);
        assert_eq!(bs.band_test(&BigRational::zero()), Ordering::Greater);
        assert!(matches!(bs.locate(0.0), Location::Gap(_)));
        for b in &bs.bands {
            assert!(b.lo.value < b.hi.value);
            assert!(rational_to_f64(&(b.lo.hi() - b.lo.lo())) <= 1e-12);
        }
    }

    #[test]
    fn closed_gap_merges_bands() {
        // period 2 with equal values: Delta = (z - v)^2 - 2 touches 2 at z = v.
        let bs = periodic_bands(&Potential::periodic_int(&[1, 1])).unwrap();
        assert_eq!(band_pairs(&bs), vec![(-1.0, 3.0)]);
    }

    #[test]
    fn example_1_dirichlet() {
        let p = example_1();
        let bs = periodic_bands(&p).unwrap();
        let rep = dirichlet_eigenvalues(&p, &bs).unwrap();
        let at_zero: Vec<_> = rep.eigenvalues.iter().filter(|e| e.value.abs() < 1e-12).collect();
        assert_eq!(at_zero.len(), 1);
        assert_eq!(at_zero[0].enclosure[0], Scalar::Rat(BigRational::zero()));
        assert!((at_zero[0].m22 - 0.5).abs() < 1e-12);
        assert!(rep.cross_validated(), "{:?}", rep.cross_validation);
        assert!(rep.diagnostics.is_empty(), "{:?}", rep.diagnostics);
    }

    #[test]
    fn constant_has_no_dirichlet() {
        let p = Potential::periodic_int(&[4]);
        let bs = periodic_bands(&p).unwrap();
        let rep = dirichlet_eigenvalues(&p, &bs).unwrap();
        assert!(rep.eigenvalues.is_empty());
        assert!(rep.integer_certificates.iter().all(|c| c.verdict == MonodromyVerdict::GapNoDirichlet));
        assert!(rep.integer_certificates.iter().any(|c| c.z == Scalar::int(1)));
    }

    #[test]
    fn integer_words_avoid_integers() {
        for w in [&[1, -2, 0][..], &[3, 0, 0, 1], &[2, -1], &[0, 0, 5, 1, -3]] {
            let p = Potential::periodic_int(w);
            let bs = periodic_bands(&p).unwrap();
            assert!(bs.bands.len() <= w.len());
            let rep = dirichlet_eigenvalues(&p, &bs).unwrap();
            for e in &rep.eigenvalues {
                assert!((e.value - e.value.round()).abs() > 1e-9, "{w:?}: {}", e.value);
            }
            assert!(rep.integer_certificates.iter().all(|c| !c.is_dirichlet()));
            assert!(rep.cross_validated(), "{w:?}: {:?}", rep.cross_validation);
        }
    }

    #[test]
    fn constant_truncation_closed_form() {
        let p = Potential::periodic_int(&[4]);
        let ev = truncation_spectrum(&p, 0, 2).unwrap();
        let expected = [4.0 - 2f64.sqrt(), 4.0, 4.0 + 2f64.sqrt()];
        for (a, b) in ev.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        let ev = truncation_spectrum(&Potential::periodic_int(&[0]), 5, 5).unwrap();
        assert!(ev.len() == 1 && ev[0].abs() < 1e-12);
    }

    #[test]
    fn example_1_truncation_sees_zero() {
        let ev = truncation_spectrum(&example_1(), 0, 299).unwrap();
        assert!(ev.iter().any(|x| x.abs() < 1e-6));
    }

    #[test]
    fn singular_values() {
        let four = Potential::periodic_int(&[4]);
        for m in 1..30i64 {
            let s = smallest_singular_value(&four, 0, m - 1, 0.0).unwrap();
            let expected = 4.0 - 2.0 * (m as f64 * PI / (m as f64 + 1.0)).cos().abs();
            assert!((s - expected).abs() < 1e-10, "m = {m}");
            assert!(s > 2.0);
        }
        let free = Potential::periodic_int(&[0]);
        for m in (1..40i64).step_by(2) {
            assert_eq!(smallest_singular_value(&free, 0, m - 1, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn example_1_sigma_decays_by_half() {
        let p = example_1();
        let mut prev: Option<f64> = None;
        for k in 5..60i64 {
            let s = smallest_singular_value(&p, 0, 3 * k - 1, 0.0).unwrap();
            assert!(s > 0.0);
            if let Some(prev) = prev {
                let ratio = s / prev;
                assert!((ratio - 0.5).abs() < 0.01, "k = {k}: {ratio}");
            }
            prev = Some(s);
        }
    }

    #[test]
    fn pollution_examples() {
        let p = Potential::periodic_int(&[4]);
        let bs = periodic_bands(&p).unwrap();
        let rep = pollution_report(&p, &bs, &[10, 50, 200]).unwrap();
        assert!(rep.rows.iter().all(|r| r.classification == Classification::InBand));

        let p = example_1();
        let bs = periodic_bands(&p).unwrap();
        let rep = pollution_report(&p, &bs, &[60, 120, 300]).unwrap();
        assert!(rep.persistent().any(|c| c.center.abs() < 1e-6));
        assert!(rep.to_csv().starts_with("size,eigenvalue,classification,gap_id\n"));
    }

    #[test]
    fn gaussian_sections_rejected() {
        let g = Potential::periodic(vec![Scalar::gauss(0, 1)], Regime::GaussianInteger).unwrap();
        assert!(truncation_spectrum(&g, 0, 3).is_err());
    }

    fn arb_word() -> impl Strategy<Value = Vec<(i64, i64)>> {
        prop::collection::vec((-6i64..=6, 1i64..=3), 1..6)
    }

    fn rational_periodic(w: &[(i64, i64)]) -> Potential {
        Potential::periodic(w.iter().map(|&(a, b)| Scalar::ratio(a, b)).collect(), Regime::Rational).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn band_partition_matches_exact_sign(w in arb_word(), probes in prop::collection::vec((-900i64..900, 1i64..100), 200)) {
            let p = rational_periodic(&w);
            let d = discriminant(&p).unwrap();
            let bs = bands(&d).unwrap();
            prop_assert!(bs.bands.len() <= w.len());
            for (a, b) in probes {
                let z = BigRational::new(a.into(), b.into());
                let zf = rational_to_f64(&z);
                // skip probes inside an edge enclosure, where floats cannot decide
                let near_edge = bs.bands.iter().any(|band| (band.lo.value - zf).abs() < 1e-9 || (band.hi.value - zf).abs() < 1e-9);
                if near_edge {
                    continue;
                }
                let exact = d.band_test(&z) != Ordering::Greater;
                prop_assert_eq!(exact, bs.locate(zf) == Location::Band, "z = {}", z);
            }
        }

        #[test]
        fn truncation_count_and_interlacing(w in prop::collection::vec(-30i64..=30, 1..6), l in -20i64..20, m in 1i64..60) {
            let vals: Vec<Scalar> = w.iter().map(|&x| Scalar::ratio(x, 7)).collect();
            let p = Potential::periodic(vals, Regime::Rational).unwrap();
            let a = truncation_spectrum(&p, l, l + m - 1).unwrap();
            let b = truncation_spectrum(&p, l, l + m).unwrap();
            prop_assert_eq!(a.len() as i64, m);
            prop_assert!(a.windows(2).all(|x| x[0] <= x[1]));
            for k in 0..a.len() {
                prop_assert!(b[k] <= a[k] + 1e-9 && a[k] <= b[k + 1] + 1e-9);
            }
        }

        #[test]
        fn sigma_matches_dense_oracle(w in prop::collection::vec(-8i64..=8, 1..5), m in 1i64..12, z in -5.0f64..5.0) {
            let p = Potential::periodic_int(&w);
            let s = smallest_singular_value(&p, 0, m - 1, z).unwrap();
            // Jacobi eigenvalue oracle on the dense section
            let n = m as usize;
            let mut a = vec![vec![0.0; n]; n];
            for i in 0..n {
                a[i][i] = p.eval_f64(i as i64) - z;
                if i + 1 < n {
                    a[i][i + 1] = 1.0;
                    a[i + 1][i] = 1.0;
                }
            }
            let ev = jacobi_eigenvalues(a);
            let oracle = ev.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
            prop_assert!((s - oracle).abs() < 1e-9, "{} vs {}", s, oracle);
        }
    }

    /// Cyclic Jacobi rotations on a dense symmetric matrix.
    fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
        let n = a.len();
        for _ in 0..100 {
            let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
            if off < 1e-30 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if a[p][q].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let (akp, akq) = (a[k][p], a[k][q]);
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let (apk, aqk) = (a[p][k], a[q][k]);
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}
