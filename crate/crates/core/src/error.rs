use alloc::boxed::Box;
use alloc::string::String;
use core::fmt;

use crate::quad::QuadratureResult;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Argument outside the certified domain of a special function.
    Domain { function: &'static str, argument: f64 },
    /// A documented precondition was violated by the caller.
    Contract(String),
    /// Adaptive quadrature ran out of subdivision budget.
    NotConverged {
        operation: &'static str,
        best: Box<QuadratureResult>,
        tolerance: f64,
    },
    /// Shell grouping could not separate two distinct squared norms.
    AmbiguousShells { lower: f64, upper: f64, group_tol: f64 },
    /// A circle family exceeded its dominating envelope at a sampled point.
    EnvelopeViolation { n: u32, x: [f64; 2], value: f64, bound: f64 },
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    /// True for failures that come from numerics rather than bad input.
    pub fn is_accuracy_failure(&self) -> bool {
        matches!(self, Error::NotConverged { .. } | Error::EnvelopeViolation { .. })
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain { function, argument } => {
                write!(f, "{function}: argument {argument} outside certified domain")
            }
            Error::Contract(msg) => write!(f, "contract violation: {msg}"),
            Error::NotConverged { operation, best, tolerance } => write!(
                f,
                "{operation}: quadrature did not reach tolerance {tolerance:e} \
                 (best value {} with error {:e} after {} evaluations)",
                best.value,
                best.total_error(),
                best.evaluations
            ),
            Error::AmbiguousShells { lower, upper, group_tol } => write!(
                f,
                "squared norms {lower} and {upper} are closer than 10 x group_tol ({group_tol:e})"
            ),
            Error::EnvelopeViolation { n, x, value, bound } => write!(
                f,
                "envelope violated at n = {n}, x = ({}, {}): f_n = {value:e} > bound {bound:e}",
                x[0], x[1]
            ),
        }
    }
}

impl core::error::Error for Error {}
