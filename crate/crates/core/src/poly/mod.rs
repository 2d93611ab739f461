//! Polynomial algebra over named variables.
//!
//! [`MultiPoly`] is a sparse polynomial in state, uncertain and time
//! variables; [`UniPoly`] is a dense polynomial in time only. The
//! [`certify_nonpositive`] routine decides whether a univariate polynomial
//! stays non-positive on a closed interval, which is the edge oracle used by
//! the planners.

mod multi;
mod sturm;
mod uni;
mod varspace;

pub use multi::MultiPoly;
pub use sturm::{certify_nonpositive, real_roots, sturm_root_count, IntervalVerdict, Outcome};
pub use uni::UniPoly;
pub use varspace::{VarClass, VarSpace, Variable};

use thiserror::Error;

/// Coefficients with magnitude below this are dropped after arithmetic.
pub const CANON_EPS: f64 = 1e-12;

/// Absolute sign tolerance used by interval certificates.
pub const SIGN_TOL: f64 = 1e-9;

/// Upper limit on the total degree of any stored monomial.
pub const MAX_TOTAL_DEGREE: u32 = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("polynomials live in different variable spaces")]
    SpaceMismatch,
    #[error("duplicate variable name `{0}`")]
    DuplicateVariable(String),
    #[error("more than one time variable (`{0}` and `{1}`)")]
    MultipleTimeVariables(String, String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("exponent vector has arity {got}, variable space has {expected}")]
    Arity { expected: usize, got: usize },
    #[error("no value supplied for variable `{0}`")]
    MissingValue(String),
    #[error("no curve supplied for state variable `{0}`")]
    MissingCurve(String),
    #[error("variable space has no time variable")]
    NoTimeVariable,
    #[error("polynomial depends on non-time variable `{0}`")]
    NotUnivariate(String),
    #[error("total degree {0} exceeds the limit of {MAX_TOTAL_DEGREE}")]
    DegreeOverflow(u32),
    #[error("operation is undefined for the zero polynomial")]
    ZeroPolynomial,
    #[error("empty interval [{0}, {1}]")]
    EmptyInterval(f64, f64),
}
