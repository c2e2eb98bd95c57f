use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid modular parameter tau = {tau}: {reason}")]
    InvalidModulus { tau: Complex64, reason: &'static str },

    #[error("theta series did not converge within {max_terms} terms")]
    TruncationExceeded { max_terms: usize },

    #[error("{what} evaluated within {distance:.3e} of a pole/zero at u = {at}")]
    NearPole {
        what: &'static str,
        at: Complex64,
        distance: f64,
    },

    #[error("branch continuation of S from 1/2 to {target} passes within {distance:.3e} of a zero of theta_1 or theta_4")]
    BranchCrossing { target: Complex64, distance: f64 },

    #[error("degenerate pair: {0}")]
    DegeneratePair(&'static str),

    #[error("{what} did not converge after {iterations} iterations (last residual {residual:.3e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("value {value} is outside the admissible range {range}")]
    OutOfRange { value: f64, range: String },

    #[error("zero denominator in {0}")]
    ZeroDenominator(&'static str),

    #[error("order mismatch: {0}")]
    OrderMismatch(String),

    #[error("objective has no sign change over the bracket [{lo}, {hi}] (values {f_lo:.3e}, {f_hi:.3e})")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("RK4 stage increment {increment:.3e} exceeds the guard at s = {s}")]
    StepTooLarge { s: f64, increment: f64 },

    #[error("trajectory aborted at s = {s}, tau = {tau}: {source}")]
    TrajectoryAborted {
        s: f64,
        tau: Complex64,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
