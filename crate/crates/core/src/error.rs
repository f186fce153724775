use thiserror::Error;

use crate::scalar::Regime;

/// Errors raised by the toolkit. Numerical "verdicts" (undetermined,
/// inconclusive) are reported through return values, not through this type,
/// unless an operation cannot produce its result at all.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("incompatible scalar regimes: {0:?} and {1:?}")]
    RegimeMismatch(Regime, Regime),

    #[error("value {value} is not representable in the {regime:?} regime")]
    NotInRegime { value: String, regime: Regime },

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("operation requires a periodic potential")]
    NotPeriodic,

    #[error("limit-operator enumeration undecidable for this class: {0}")]
    EnumerationUndecidable(String),

    #[error("invalid ring description: {0}")]
    InvalidRing(String),

    #[error("invalid range: l = {l} > r = {r}")]
    InvalidRange { l: i64, r: i64 },

    #[error("invalid section scheme: {0}")]
    InvalidScheme(String),

    #[error("singular section [{l}, {r}] (sigma_min estimate {sigma_min_estimate:e})")]
    SingularSection {
        l: i64,
        r: i64,
        sigma_min_estimate: f64,
    },

    #[error("reference solution did not converge: {0}")]
    Inconclusive(String),

    #[error("polynomial has non-real roots: {0}")]
    NonRealRoots(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
