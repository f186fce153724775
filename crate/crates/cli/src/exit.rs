use std::process::ExitCode;

use schrod_core::Error;

/// Why a command did not pass.
#[derive(Debug)]
pub enum Failure {
    /// A check failed or a computation errored; exit code 1.
    Check(String),
    /// Bad arguments, config or input class; exit code 2.
    Usage(String),
    /// No decision could be reached; exit code 3.
    Inconclusive(String),
}

impl Failure {
    pub fn code(&self) -> ExitCode {
        ExitCode::from(match self {
            Failure::Check(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Inconclusive(_) => 3,
        })
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Check(m) | Failure::Usage(m) | Failure::Inconclusive(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        match e {
            Error::Inconclusive(_) => Failure::Inconclusive(e.to_string()),
            Error::InvalidPotential(_)
            | Error::InvalidScheme(_)
            | Error::InvalidRing(_)
            | Error::InvalidRange { .. }
            | Error::Parse(_)
            | Error::NotPeriodic
            | Error::NotInRegime { .. }
            | Error::RegimeMismatch(..)
            | Error::EnumerationUndecidable(_) => Failure::Usage(e.to_string()),
            _ => Failure::Check(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Failure {
        Failure::Check(format!("i/o error: {e}"))
    }
}
