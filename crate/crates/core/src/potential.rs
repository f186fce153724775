//! Two-sided potentials `v: Z -> R` given by finite descriptions.

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Regime, Scalar};

/// Only the golden-ratio slope is supported for Sturmian potentials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Slope {
    #[default]
    Golden,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialKind {
    /// `v(n) = word[(n + phase) mod len]`.
    Periodic { word: Vec<Scalar>, phase: i64 },
    /// `core` occupies `start..start+core.len()`. Left of it
    /// `v(n) = left_word[(n - left_anchor) mod q]`, right of it
    /// `v(n) = right_word[(n - right_anchor) mod p]`.
    EventuallyPeriodic {
        left_word: Vec<Scalar>,
        left_anchor: i64,
        core: Vec<Scalar>,
        start: i64,
        right_word: Vec<Scalar>,
        right_anchor: i64,
    },
    /// `v(n) = fibonacci_value(orientation * n + offset)`.
    Sturmian { slope: Slope, offset: i64, orientation: i64 },
    /// `word` occupies `start..start+word.len()`, `outside` elsewhere.
    Explicit { word: Vec<Scalar>, start: i64, outside: Scalar },
    /// With `m = orientation * n + offset`: a draw from `values` keyed on
    /// `(seed, m)` when `-left_len <= m < right_len` (a missing length means
    /// unbounded on that side), and `values[0]` elsewhere.
    Random {
        seed: u64,
        values: Vec<Scalar>,
        left_len: Option<u64>,
        right_len: Option<u64>,
        offset: i64,
        orientation: i64,
    },
}

/// Periodic-at-both-ends view of a potential.
#[derive(Debug, Clone, PartialEq)]
pub struct EventuallyPeriodicParts {
    pub left_word: Vec<Scalar>,
    pub left_anchor: i64,
    pub core: Vec<Scalar>,
    pub start: i64,
    pub right_word: Vec<Scalar>,
    pub right_anchor: i64,
}

impl EventuallyPeriodicParts {
    /// First index governed by the right word.
    pub fn right_start(&self) -> i64 {
        self.start + self.core.len() as i64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PotentialDoc", into = "PotentialDoc")]
pub struct Potential {
    kind: PotentialKind,
    regime: Regime,
}

fn coerce_all(values: &[Scalar], regime: Regime) -> Result<Vec<Scalar>> {
    values.iter().map(|v| v.coerce(regime)).collect()
}

fn nonempty(word: &[Scalar], what: &str) -> Result<()> {
    if word.is_empty() {
        return Err(Error::InvalidPotential(format!("{what} must be non-empty")));
    }
    Ok(())
}

fn check_orientation(o: i64) -> Result<()> {
    if o != 1 && o != -1 {
        return Err(Error::InvalidPotential(format!("orientation must be +1 or -1, got {o}")));
    }
    Ok(())
}

impl Potential {
    /// Validate the description and coerce every stored value into `regime`.
    pub fn new(kind: PotentialKind, regime: Regime) -> Result<Potential> {
        let kind = match kind {
            PotentialKind::Periodic { word, phase } => {
                nonempty(&word, "periodic word")?;
                PotentialKind::Periodic { word: coerce_all(&word, regime)?, phase }
            }
            PotentialKind::EventuallyPeriodic {
                left_word,
                left_anchor,
                core,
                start,
                right_word,
                right_anchor,
            } => {
                nonempty(&left_word, "left word")?;
                nonempty(&right_word, "right word")?;
                PotentialKind::EventuallyPeriodic {
                    left_word: coerce_all(&left_word, regime)?,
                    left_anchor,
                    core: coerce_all(&core, regime)?,
                    start,
                    right_word: coerce_all(&right_word, regime)?,
                    right_anchor,
                }
            }
            PotentialKind::Sturmian { slope, offset, orientation } => {
                check_orientation(orientation)?;
                PotentialKind::Sturmian { slope, offset, orientation }
            }
            PotentialKind::Explicit { word, start, outside } => PotentialKind::Explicit {
                word: coerce_all(&word, regime)?,
                start,
                outside: outside.coerce(regime)?,
            },
            PotentialKind::Random { seed, values, left_len, right_len, offset, orientation } => {
                nonempty(&values, "random value set")?;
                check_orientation(orientation)?;
                PotentialKind::Random {
                    seed,
                    values: coerce_all(&values, regime)?,
                    left_len,
                    right_len,
                    offset,
                    orientation,
                }
            }
        };
        Ok(Potential { kind, regime })
    }

    pub fn periodic(word: Vec<Scalar>, regime: Regime) -> Result<Potential> {
        Potential::new(PotentialKind::Periodic { word, phase: 0 }, regime)
    }

    /// Periodic integer potential from small integers.
    pub fn periodic_int(word: &[i64]) -> Potential {
        Potential::periodic(word.iter().map(|&v| Scalar::int(v)).collect(), Regime::Integer)
            .expect("integer words are valid")
    }

    pub fn constant(value: Scalar) -> Potential {
        let regime = value.regime();
        Potential::periodic(vec![value], regime).expect("single value is a valid word")
    }

    /// Eventually periodic potential whose left word occupies the block just
    /// before the core and whose right word starts right after it.
    pub fn eventually_periodic(
        left_word: Vec<Scalar>,
        core: Vec<Scalar>,
        start: i64,
        right_word: Vec<Scalar>,
        regime: Regime,
    ) -> Result<Potential> {
        let left_anchor = start - left_word.len() as i64;
        let right_anchor = start + core.len() as i64;
        Potential::new(
            PotentialKind::EventuallyPeriodic {
                left_word,
                left_anchor,
                core,
                start,
                right_word,
                right_anchor,
            },
            regime,
        )
    }

    pub fn fibonacci() -> Potential {
        Potential {
            kind: PotentialKind::Sturmian { slope: Slope::Golden, offset: 0, orientation: 1 },
            regime: Regime::Integer,
        }
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    /// Value `v(n)`, exact in the declared regime.
    pub fn eval(&self, n: i64) -> Scalar {
        match &self.kind {
            PotentialKind::Periodic { word, phase } => {
                word[(n + phase).rem_euclid(word.len() as i64) as usize].clone()
            }
            PotentialKind::EventuallyPeriodic {
                left_word,
                left_anchor,
                core,
                start,
                right_word,
                right_anchor,
            } => {
                if n < *start {
                    left_word[(n - left_anchor).rem_euclid(left_word.len() as i64) as usize].clone()
                } else if n >= start + core.len() as i64 {
                    right_word[(n - right_anchor).rem_euclid(right_word.len() as i64) as usize]
                        .clone()
                } else {
                    core[(n - start) as usize].clone()
                }
            }
            PotentialKind::Sturmian { offset, orientation, .. } => {
                let bit = fibonacci_value(orientation * n + offset);
                Scalar::int(bit as i64).coerce(self.regime).expect("0/1 in every regime")
            }
            PotentialKind::Explicit { word, start, outside } => {
                let k = n - start;
                if (0..word.len() as i64).contains(&k) {
                    word[k as usize].clone()
                } else {
                    outside.clone()
                }
            }
            PotentialKind::Random { seed, values, left_len, right_len, offset, orientation } => {
                let m = orientation * n + offset;
                let inside_left = left_len.map_or(true, |len| m >= -(len as i64));
                let inside_right = right_len.map_or(true, |len| m < len as i64);
                if inside_left && inside_right {
                    values[random_index(*seed, m, values.len())].clone()
                } else {
                    values[0].clone()
                }
            }
        }
    }

    pub fn eval_f64(&self, n: i64) -> f64 {
        self.eval(n).to_f64()
    }

    /// `v(l..=r)` as floats (empty when `r < l`).
    pub fn window_f64(&self, l: i64, r: i64) -> Vec<f64> {
        (l..=r).map(|n| self.eval_f64(n)).collect()
    }

    /// Reflected potential: `eval(reflect(p), n) == eval(p, -n)`.
    pub fn reflect(&self) -> Potential {
        let kind = match &self.kind {
            PotentialKind::Periodic { word, phase } => PotentialKind::Periodic {
                word: reflect_word(word),
                phase: -phase,
            },
            PotentialKind::EventuallyPeriodic {
                left_word,
                left_anchor,
                core,
                start,
                right_word,
                right_anchor,
            } => {
                let mut rev = core.clone();
                rev.reverse();
                PotentialKind::EventuallyPeriodic {
                    left_word: reflect_word(right_word),
                    left_anchor: -right_anchor,
                    core: rev,
                    start: -(start + core.len() as i64) + 1,
                    right_word: reflect_word(left_word),
                    right_anchor: -left_anchor,
                }
            }
            PotentialKind::Sturmian { slope, offset, orientation } => {
                PotentialKind::Sturmian { slope: *slope, offset: *offset, orientation: -orientation }
            }
            PotentialKind::Explicit { word, start, outside } => {
                let mut rev = word.clone();
                rev.reverse();
                PotentialKind::Explicit {
                    word: rev,
                    start: -(start + word.len() as i64) + 1,
                    outside: outside.clone(),
                }
            }
            PotentialKind::Random { seed, values, left_len, right_len, offset, orientation } => {
                PotentialKind::Random {
                    seed: *seed,
                    values: values.clone(),
                    left_len: *left_len,
                    right_len: *right_len,
                    offset: *offset,
                    orientation: -orientation,
                }
            }
        };
        Potential { kind, regime: self.regime }
    }

    /// Shifted potential: `eval(shift(p, k), n) == eval(p, n + k)`.
    pub fn shift(&self, k: i64) -> Potential {
        let kind = match &self.kind {
            PotentialKind::Periodic { word, phase } => {
                PotentialKind::Periodic { word: word.clone(), phase: phase + k }
            }
            PotentialKind::EventuallyPeriodic {
                left_word,
                left_anchor,
                core,
                start,
                right_word,
                right_anchor,
            } => PotentialKind::EventuallyPeriodic {
                left_word: left_word.clone(),
                left_anchor: left_anchor - k,
                core: core.clone(),
                start: start - k,
                right_word: right_word.clone(),
                right_anchor: right_anchor - k,
            },
            PotentialKind::Sturmian { slope, offset, orientation } => PotentialKind::Sturmian {
                slope: *slope,
                offset: offset + orientation * k,
                orientation: *orientation,
            },
            PotentialKind::Explicit { word, start, outside } => PotentialKind::Explicit {
                word: word.clone(),
                start: start - k,
                outside: outside.clone(),
            },
            PotentialKind::Random { seed, values, left_len, right_len, offset, orientation } => {
                PotentialKind::Random {
                    seed: *seed,
                    values: values.clone(),
                    left_len: *left_len,
                    right_len: *right_len,
                    offset: offset + orientation * k,
                    orientation: *orientation,
                }
            }
        };
        Potential { kind, regime: self.regime }
    }

    /// Period of a periodic potential (`None` for other kinds).
    pub fn period(&self) -> Option<usize> {
        match &self.kind {
            PotentialKind::Periodic { word, .. } => Some(word.len()),
            _ => None,
        }
    }

    /// One period `v(0), ..., v(p-1)` of a periodic potential.
    pub fn period_values(&self) -> Result<Vec<Scalar>> {
        let p = self.period().ok_or(Error::NotPeriodic)?;
        Ok((0..p as i64).map(|n| self.eval(n)).collect())
    }

    /// Every value the potential can take (finite set of stored scalars).
    pub fn value_set(&self) -> Vec<Scalar> {
        match &self.kind {
            PotentialKind::Periodic { word, .. } => word.clone(),
            PotentialKind::EventuallyPeriodic { left_word, core, right_word, .. } => {
                left_word.iter().chain(core).chain(right_word).cloned().collect()
            }
            PotentialKind::Sturmian { .. } => {
                vec![Scalar::zero_in(self.regime), Scalar::one_in(self.regime)]
            }
            PotentialKind::Explicit { word, outside, .. } => {
                word.iter().chain(std::iter::once(outside)).cloned().collect()
            }
            PotentialKind::Random { values, .. } => values.clone(),
        }
    }

    /// `(min v, max v)` over all of Z, as floats (real part for Gaussian values).
    pub fn bounds_f64(&self) -> (f64, f64) {
        self.value_set().iter().map(Scalar::to_f64).fold(
            (f64::INFINITY, f64::NEG_INFINITY),
            |(lo, hi), v| (lo.min(v), hi.max(v)),
        )
    }

    pub fn is_integer_valued(&self) -> bool {
        self.value_set().iter().all(|v| match v {
            Scalar::Int(_) => true,
            Scalar::Rat(q) => q.is_integer(),
            _ => false,
        })
    }

    /// The periodic-at-both-ends view, available for periodic,
    /// eventually-periodic and explicit potentials.
    pub fn eventually_periodic_parts(&self) -> Option<EventuallyPeriodicParts> {
        match &self.kind {
            PotentialKind::Periodic { word, phase } => Some(EventuallyPeriodicParts {
                left_word: word.clone(),
                left_anchor: -phase,
                core: Vec::new(),
                start: 0,
                right_word: word.clone(),
                right_anchor: -phase,
            }),
            PotentialKind::EventuallyPeriodic {
                left_word,
                left_anchor,
                core,
                start,
                right_word,
                right_anchor,
            } => Some(EventuallyPeriodicParts {
                left_word: left_word.clone(),
                left_anchor: *left_anchor,
                core: core.clone(),
                start: *start,
                right_word: right_word.clone(),
                right_anchor: *right_anchor,
            }),
            PotentialKind::Explicit { word, start, outside } => Some(EventuallyPeriodicParts {
                left_word: vec![outside.clone()],
                left_anchor: 0,
                core: word.clone(),
                start: *start,
                right_word: vec![outside.clone()],
                right_anchor: 0,
            }),
            PotentialKind::Sturmian { .. } | PotentialKind::Random { .. } => None,
        }
    }

    pub fn from_json(text: &str) -> Result<Potential> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("potentials always serialize")
    }
}

fn reflect_word(word: &[Scalar]) -> Vec<Scalar> {
    let len = word.len() as i64;
    (0..len).map(|j| word[(-j).rem_euclid(len) as usize].clone()).collect()
}

/// Stateless draw keyed on `(seed, index)`: the ChaCha stream id is the
/// zigzag-encoded index, so any index is reachable without replaying others.
fn random_index(seed: u64, index: i64, len: usize) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zigzag = ((index << 1) ^ (index >> 63)) as u64;
    rng.set_stream(zigzag);
    rng.random_range(0..len)
}

// ---------------------------------------------------------------------------
// Fibonacci / Sturmian coding

/// `floor(n * alpha)` with `alpha = (sqrt 5 - 1) / 2`, exactly.
///
/// For `n > 0`, `n * alpha = (sqrt(5 n^2) - n) / 2` and `sqrt(5 n^2)` is
/// irrational, so the floor equals `floor((isqrt(5 n^2) - n) / 2)`.
/// For `n < 0` the product is never an integer, hence
/// `floor(n alpha) = -floor(|n| alpha) - 1`.
pub fn floor_golden_multiple(n: i64) -> BigInt {
    if n == 0 {
        return BigInt::from(0);
    }
    let m = BigInt::from(n.unsigned_abs());
    let root = (BigInt::from(5) * &m * &m).sqrt();
    let pos = (root - &m) / 2;
    if n > 0 {
        pos
    } else {
        -pos - 1
    }
}

/// `chi_[1-alpha, 1)(n alpha mod 1)`, computed as
/// `floor((n+1) alpha) - floor(n alpha)` in integer arithmetic.
pub fn fibonacci_value(n: i64) -> u8 {
    let d = floor_golden_multiple(n + 1) - floor_golden_multiple(n);
    if d == BigInt::from(1) {
        1
    } else {
        0
    }
}

/// First `len` letters of the fixed point of the substitution `1 -> 10`,
/// `0 -> 1`. Letter `i` (0-based) corresponds to index `n = i + 1`.
pub fn fibonacci_substitution_word(len: usize) -> Vec<u8> {
    let mut word = vec![1u8];
    while word.len() < len {
        let mut next = Vec::with_capacity(word.len() * 2);
        for &c in &word {
            if c == 1 {
                next.extend_from_slice(&[1, 0]);
            } else {
                next.push(1);
            }
        }
        word = next;
    }
    word.truncate(len);
    word
}

// ---------------------------------------------------------------------------
// Rings of admissible values

/// The grid `R = r Z + r^2 Z + ... + r^n Z` with `r = exp(2 pi i / n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RingSpec {
    pub order: u32,
}

/// The four admissibility conditions for a value ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RingCondition {
    /// `-1, 0, 1` are elements.
    ContainsUnits,
    /// Potential values lie in the ring.
    ValuesInRing,
    /// Closed under `+` and `*`.
    Ring,
    /// No nonzero element of modulus `< 1`.
    ZeroIsolated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RingValidity {
    Valid { coefficient_bound: i64 },
    Invalid {
        condition: RingCondition,
        reason: String,
        /// Integer coefficients `c_k` of the offending element `sum c_k r^k`.
        witness: Vec<i64>,
        modulus: f64,
    },
}

pub const MAX_RING_ORDER: u32 = 12;
const ENUMERATION_BUDGET: u64 = 4_000_000;

impl RingSpec {
    pub fn new(order: u32) -> Result<RingSpec> {
        if order == 0 || order > MAX_RING_ORDER {
            return Err(Error::InvalidRing(format!(
                "generator order {order} outside 1..={MAX_RING_ORDER}"
            )));
        }
        Ok(RingSpec { order })
    }

    fn root_powers(&self) -> Vec<(f64, f64)> {
        let n = self.order as f64;
        (1..=self.order)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / n;
                (t.cos(), t.sin())
            })
            .collect()
    }

    /// Exact membership for the grids this toolkit computes with
    /// (`Z` for orders 1 and 2, `Z + iZ` for order 4); `None` otherwise.
    pub fn contains(&self, value: &Scalar) -> Option<bool> {
        match self.order {
            1 | 2 => Some(value.regime() != Regime::Float && value.coerce(Regime::Integer).is_ok()),
            4 => Some(
                value.regime() != Regime::Float && value.coerce(Regime::GaussianInteger).is_ok(),
            ),
            _ => None,
        }
    }

    /// Validate a potential's value set against the ring (condition (ii)).
    pub fn admits(&self, p: &Potential) -> Option<bool> {
        p.value_set().iter().map(|v| self.contains(v)).try_fold(true, |acc, m| m.map(|m| acc && m))
    }
}

/// Decide conditions (i)-(iv) for a root-of-unity grid.
///
/// (i) and (iii) hold for every such grid (`1 = r^n` is a generator and
/// `r^j r^k = r^(j+k)`). (iv) is decided by enumerating all coefficient
/// vectors with entries in `[-B, B]`, `B = floor(search_radius)` (reduced
/// if the enumeration would exceed a fixed budget), looking for a nonzero
/// element of modulus below one.
pub fn validate_ring(ring: &RingSpec, search_radius: f64) -> Result<RingValidity> {
    let ring = RingSpec::new(ring.order)?;
    if !(search_radius >= 2.0) {
        return Err(Error::InvalidRing(format!("search radius {search_radius} < 2")));
    }
    let n = ring.order as usize;
    let mut bound = search_radius.floor() as i64;
    while bound > 1 && ((2 * bound + 1) as u64).checked_pow(n as u32).map_or(true, |c| c > ENUMERATION_BUDGET) {
        bound -= 1;
    }
    let powers = ring.root_powers();
    let mut coeffs = vec![-bound; n];
    let mut best: Option<(Vec<i64>, f64)> = None;
    loop {
        let (re, im) = coeffs
            .iter()
            .zip(&powers)
            .fold((0.0, 0.0), |(a, b), (&c, &(x, y))| (a + c as f64 * x, b + c as f64 * y));
        let modulus = re.hypot(im);
        if modulus > 1e-9 && modulus < 1.0 - 1e-12 && best.as_ref().map_or(true, |(_, m)| modulus < *m) {
            best = Some((coeffs.clone(), modulus));
        }
        // odometer increment
        let mut i = 0;
        while i < n {
            coeffs[i] += 1;
            if coeffs[i] <= bound {
                break;
            }
            coeffs[i] = -bound;
            i += 1;
        }
        if i == n {
            break;
        }
    }
    Ok(match best {
        None => RingValidity::Valid { coefficient_bound: bound },
        Some((witness, modulus)) => RingValidity::Invalid {
            condition: RingCondition::ZeroIsolated,
            reason: format!(
                "distinct points closer than 1: nonzero element of modulus {modulus:.6} found"
            ),
            witness,
            modulus,
        },
    })
}

// ---------------------------------------------------------------------------
// JSON document form

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum KindDoc {
    Periodic {
        word: Vec<Scalar>,
        #[serde(default)]
        phase: i64,
    },
    EventuallyPeriodic {
        left_word: Vec<Scalar>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        left_anchor: Option<i64>,
        #[serde(default)]
        core: Vec<Scalar>,
        #[serde(default)]
        start: i64,
        right_word: Vec<Scalar>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        right_anchor: Option<i64>,
    },
    Sturmian {
        #[serde(default)]
        slope: Slope,
        #[serde(default)]
        offset: i64,
        #[serde(default = "one")]
        orientation: i64,
    },
    Explicit {
        word: Vec<Scalar>,
        #[serde(default)]
        start: i64,
        outside: Scalar,
    },
    Random {
        seed: u64,
        values: Vec<Scalar>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        left_len: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        right_len: Option<u64>,
        #[serde(default)]
        offset: i64,
        #[serde(default = "one")]
        orientation: i64,
    },
}

fn one() -> i64 {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PotentialDoc {
    #[serde(flatten)]
    kind: KindDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    regime: Option<Regime>,
}

impl TryFrom<PotentialDoc> for Potential {
    type Error = Error;

    fn try_from(doc: PotentialDoc) -> Result<Potential> {
        let (kind, values): (PotentialKind, Vec<Scalar>) = match doc.kind {
            KindDoc::Periodic { word, phase } => {
                (PotentialKind::Periodic { word: word.clone(), phase }, word)
            }
            KindDoc::EventuallyPeriodic {
                left_word,
                left_anchor,
                core,
                start,
                right_word,
                right_anchor,
            } => {
                let values = left_word.iter().chain(&core).chain(&right_word).cloned().collect();
                let left_anchor = left_anchor.unwrap_or(start - left_word.len() as i64);
                let right_anchor = right_anchor.unwrap_or(start + core.len() as i64);
                (
                    PotentialKind::EventuallyPeriodic {
                        left_word,
                        left_anchor,
                        core,
                        start,
                        right_word,
                        right_anchor,
                    },
                    values,
                )
            }
            KindDoc::Sturmian { slope, offset, orientation } => {
                (PotentialKind::Sturmian { slope, offset, orientation }, vec![Scalar::int(0)])
            }
            KindDoc::Explicit { word, start, outside } => {
                let mut values = word.clone();
                values.push(outside.clone());
                (PotentialKind::Explicit { word, start, outside }, values)
            }
            KindDoc::Random { seed, values, left_len, right_len, offset, orientation } => (
                PotentialKind::Random {
                    seed,
                    values: values.clone(),
                    left_len,
                    right_len,
                    offset,
                    orientation,
                },
                values,
            ),
        };
        let regime = match doc.regime {
            Some(r) => r,
            None => values
                .iter()
                .try_fold(Regime::Integer, |acc, v| acc.join(v.regime()))?,
        };
        Potential::new(kind, regime)
    }
}

impl From<Potential> for PotentialDoc {
    fn from(p: Potential) -> PotentialDoc {
        let kind = match p.kind {
            PotentialKind::Periodic { word, phase } => KindDoc::Periodic { word, phase },
            PotentialKind::EventuallyPeriodic {
                left_word,
                left_anchor,
                core,
                start,
                right_word,
                right_anchor,
            } => KindDoc::EventuallyPeriodic {
                left_word,
                left_anchor: Some(left_anchor),
                core,
                start,
                right_word,
                right_anchor: Some(right_anchor),
            },
            PotentialKind::Sturmian { slope, offset, orientation } => {
                KindDoc::Sturmian { slope, offset, orientation }
            }
            PotentialKind::Explicit { word, start, outside } => {
                KindDoc::Explicit { word, start, outside }
            }
            PotentialKind::Random { seed, values, left_len, right_len, offset, orientation } => {
                KindDoc::Random { seed, values, left_len, right_len, offset, orientation }
            }
        };
        PotentialDoc { kind, regime: Some(p.regime) }
    }
}
