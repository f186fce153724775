//! Exact and floating-point tools for one-dimensional discrete Schrödinger
//! operators `(Hx)_n = x_{n-1} + v(n) x_n + x_{n+1}`.

pub mod error;
pub mod exactalg;
pub mod fsm;
pub mod limitops;
pub mod poly;
pub mod potential;
pub mod scalar;
pub mod spectral;

pub use error::{Error, Result};
pub use num_rational::BigRational;
pub use exactalg::{
    discriminant, finite_section_determinant, monodromy, monodromy_dirichlet_test, transfer_product, Discriminant,
    MonodromyCertificate, MonodromyVerdict, TransferMatrix,
};
pub use fsm::{
    reference_solution, run_fsm, solve_section, stability_scan, CompactVector, FsmReport, FsmVerdict, SectionScheme,
    Sequence, StabilityScan,
};
pub use limitops::{
    essential_spectrum, fsm_applicability, is_fredholm, kernel_vector, limit_operators, ApplicabilityVerdict,
    FredholmVerdict, LimitOperatorSet, Side,
};
pub use potential::{Potential, PotentialKind, RingSpec};
pub use scalar::{GaussInt, Regime, Scalar};
pub use spectral::{
    bands, dirichlet_eigenvalues, periodic_bands, smallest_singular_value, truncation_spectrum, BandSet,
    DirichletSpectrumReport,
};
