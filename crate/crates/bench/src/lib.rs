//! Benchmark inputs shared by the criterion targets.

use schrod_core::{Potential, Regime, Scalar};

/// The 3-periodic word `(1/2, 2, 1/2)`.
pub fn example_1() -> Potential {
    Potential::periodic(vec![Scalar::ratio(1, 2), Scalar::int(2), Scalar::ratio(1, 2)], Regime::Rational)
        .expect("valid word")
}

/// An integer word with a wide gap around 0.
pub fn integer_word() -> Potential {
    Potential::periodic_int(&[3, -1, 4, -1, 5])
}
